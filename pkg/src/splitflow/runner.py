"""Ensemble execution: single runs, sweeps, convergence and coupling studies.

Paths are partitioned into fixed-size chunks processed by a worker pool.
Each path owns keyed noise streams and every reduction merges per-chunk
partial sums in chunk order, so for a given (config, seed) the results are
bit-identical for any worker count.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import multiprocessing
import numpy as np

from . import kernels
from .config import ConfigError, ExperimentConfig, SweepSpec, validate_config
from .estimators import (DiffusivityEstimate, PowerLawFit, RunningSeries,
                         diffusivity_from_moments, fit_power_law)
from .fields import SplittableField, get_field, parse_field_text, stream_function_many
from .noise import PathStreams, sample_brownian

BLOCK_STEPS = 8192        # noise pregeneration block
CHUNK_PATHS = 64          # fixed chunk size; never derived from worker count
SNAPSHOTS_PER_DECADE = 32
REFERENCE_REFINEMENT = 16  # fine/coarse step ratio of the convergence oracle


class NumericalError(RuntimeError):
    """A path left the finite domain; message names path index and time."""


@dataclass(frozen=True, eq=False)
class SimulationResult:
    config: ExperimentConfig
    estimate: DiffusivityEstimate
    running: RunningSeries
    psi: RunningSeries | None
    horizon: float


@dataclass(frozen=True, eq=False)
class SweepResult:
    parameter: str
    values: tuple[float, ...]
    runs: tuple[SimulationResult, ...]
    fit: PowerLawFit
    fit_entry: str


@dataclass(frozen=True, eq=False)
class SlopeReport:
    parameter: str
    values: tuple[float, ...]
    errors: tuple[float, ...]
    slope: float
    r_squared: float


def default_workers() -> int:
    env = os.environ.get("SPLITFLOW_WORKERS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def resolve_field(cfg: ExperimentConfig, field: SplittableField | None = None) -> SplittableField:
    """Field object for a run: built-in by name, or `file:PATH` descriptions."""
    if field is not None:
        fld = field
    elif cfg.field.startswith("file:"):
        path = cfg.field[len("file:"):]
        try:
            text = open(path).read()
        except OSError as exc:
            raise ConfigError(f"field: cannot read {path!r} ({exc})")
        fld = parse_field_text(text)
    else:
        fld = get_field(cfg.field)
    if not fld.all_sine:
        raise ConfigError("field: ensemble drivers support sine-profile fields only")
    return fld


def n_steps(cfg: ExperimentConfig) -> int:
    steps = int(round(cfg.horizon / cfg.dt))
    if steps < 1 or abs(steps * cfg.dt - cfg.horizon) > 1e-8 * max(1.0, cfg.horizon):
        raise ConfigError("T: must be a positive integer multiple of dt")
    return steps


def snapshot_steps(cfg: ExperimentConfig) -> np.ndarray:
    """Strictly increasing step indices ending at the final step.

    Defaults to a geometric grid with SNAPSHOTS_PER_DECADE points per
    decade, dense enough to resolve both the ballistic and the diffusive
    regime of the running statistics.
    """
    total = n_steps(cfg)
    if cfg.snapshot_times is not None:
        steps = [int(round(t / cfg.dt)) for t in cfg.snapshot_times]
        for t, s in zip(cfg.snapshot_times, steps):
            if s < 1 or abs(s * cfg.dt - t) > 1e-8 * max(1.0, t):
                raise ConfigError(f"snapshots: time {t} is not a step multiple")
            if s > total:
                raise ConfigError(f"snapshots: time {t} exceeds the horizon")
        out = np.array(sorted(set(steps)), dtype=np.int64)
    else:
        count = max(2, int(round(SNAPSHOTS_PER_DECADE * math.log10(total))) + 1)
        grid = np.unique(np.round(10 ** np.linspace(0.0, math.log10(total), count)).astype(np.int64))
        out = grid[grid >= 1]
    if out[-1] != total:
        out = np.append(out, total)
    return out


def _initial_position(cfg: ExperimentConfig, field: SplittableField,
                      streams: PathStreams, path_index: int) -> np.ndarray:
    ic = cfg.initial_condition
    if ic == "uniform_cell":
        return 2.0 * np.pi * streams.init.random(field.dim)
    if ic == "origin":
        return np.zeros(field.dim)
    pts = ic
    pt = np.asarray(pts[path_index % len(pts)], dtype=float)
    if pt.shape != (field.dim,):
        raise ConfigError(f"initial: point {tuple(pt)} does not match dimension {field.dim}")
    return pt.copy()


def _advance_path(cfg: ExperimentConfig, field: SplittableField, streams: PathStreams,
                  x0: np.ndarray, snaps: np.ndarray, pos_out: np.ndarray,
                  path_index: int) -> None:
    """Integrate one path, storing positions at the snapshot steps."""
    d, e = field.d_mat, field.e_mat
    dim = field.dim
    dt = cfg.dt
    x = x0.copy()
    model, integ = cfg.model, cfg.integrator

    if model == "passive":
        scale = cfg.sigma * math.sqrt(dt)
        kern = kernels.passive_splitting_kernel if integ == "splitting" \
            else kernels.passive_euler_kernel

        def run_block(m):
            z = streams.gamma.standard_normal((m, dim))
            kern(x, d, e, dt, z, scale, 0, kernels.NO_RECORD)

    elif model == "inertial":
        y = np.zeros(dim)
        if integ == "splitting":
            plan = kernels.inertial_plan(cfg.sigma, cfg.tau, dt, field.n_terms)

            def run_block(m):
                zg = streams.gamma.standard_normal((m, dim))
                zx = streams.xi.standard_normal((m, dim))
                kernels.inertial_splitting_kernel(x, y, d, e, *plan, zg, zx,
                                                  0, kernels.NO_RECORD)
        else:
            sqtau, dt_over_tau, signoise = kernels.inertial_euler_plan(cfg.sigma, cfg.tau, dt)

            def run_block(m):
                zx = streams.xi.standard_normal((m, dim))
                kernels.inertial_euler_kernel(x, y, d, e, dt, sqtau, dt_over_tau,
                                              signoise, zx, 0, kernels.NO_RECORD)

    elif model == "colored":
        eta = np.zeros(dim)
        plan = kernels.colored_plan(cfg.sigma, cfg.corr_time, dt)

        def run_block(m):
            z_eta = streams.eta.standard_normal((m, dim))
            z_int = streams.gamma.standard_normal((m, dim))
            kernels.colored_splitting_kernel(x, eta, d, e, dt, *plan, z_eta, z_int,
                                             0, kernels.NO_RECORD)

    else:  # modified
        tau_dt = cfg.tau * dt
        sqnoise = math.sqrt(cfg.tau) * math.sqrt(dt)

        def run_block(m):
            z = streams.gamma.standard_normal((m, dim))
            kernels.modified_splitting_kernel(x, d, e, dt, tau_dt, sqnoise, z,
                                              0, kernels.NO_RECORD)

    done = 0
    for si, target in enumerate(snaps):
        while done < target:
            m = min(BLOCK_STEPS, int(target - done))
            run_block(m)
            done += m
        pos_out[si] = x
        if not np.isfinite(x).all():
            raise NumericalError(
                f"non-finite state in path {path_index} at t = {done * dt:g}")


def _chunk_partials(cfg: ExperimentConfig, field: SplittableField,
                    start: int, stop: int, snaps: np.ndarray) -> tuple:
    """Accumulate one chunk's sums in path order."""
    dim = field.dim
    n_snap = snaps.shape[0]
    horizon = snaps[-1] * cfg.dt
    times = snaps * cfg.dt
    sum_m = np.zeros((dim, dim))
    sum_m2 = np.zeros((dim, dim))
    sum_v = np.zeros(n_snap)
    sum_v2 = np.zeros(n_snap)
    want_psi = field.has_stream_function
    sum_psi = np.zeros(n_snap)
    sum_psi2 = np.zeros(n_snap)
    pos = np.empty((n_snap, dim))
    for idx in range(start, stop):
        streams = PathStreams.for_path(cfg.seed, idx)
        x0 = _initial_position(cfg, field, streams, idx)
        _advance_path(cfg, field, streams, x0, snaps, pos, idx)
        disp = pos - x0
        m_p = np.outer(disp[-1], disp[-1]) / (2.0 * horizon)
        sum_m += m_p
        sum_m2 += m_p * m_p
        v = disp[:, 0] ** 2 / (2.0 * times)
        sum_v += v
        sum_v2 += v * v
        if want_psi:
            p = stream_function_many(field, pos)
            sum_psi += p
            sum_psi2 += p * p
    return sum_m, sum_m2, sum_v, sum_v2, sum_psi, sum_psi2


def _chunk_worker(args):
    cfg, field, start, stop, snaps = args
    return _chunk_partials(cfg, field, start, stop, snaps)


def _map_chunks(worker, jobs, workers: int):
    """Run chunk jobs, yielding results in submission order."""
    if workers <= 1 or len(jobs) <= 1:
        for job in jobs:
            yield worker(job)
        return
    ctx = multiprocessing.get_context("fork")
    with ProcessPoolExecutor(max_workers=workers, mp_context=ctx) as pool:
        yield from pool.map(worker, jobs)


def _warm_kernels(cfg: ExperimentConfig, field: SplittableField) -> None:
    """Compile the kernels in the parent so forked workers inherit them."""
    probe = replace(cfg, n_paths=1)
    snaps = np.array([1], dtype=np.int64)
    pos = np.empty((1, field.dim))
    streams = PathStreams.for_path(cfg.seed, 0)
    _advance_path(probe, field, streams, np.zeros(field.dim), snaps, pos, 0)


def _warm_pair_kernels(field: SplittableField) -> None:
    """Compile the recording kernels used by the convergence/coupling chunks."""
    d, e = field.d_mat, field.e_mat
    z = np.zeros((1, field.dim))
    rec = np.empty((1, field.dim))
    kernels.passive_splitting_kernel(np.zeros(field.dim), d, e, 0.01, z, 0.0, 1, rec)
    plan = kernels.inertial_plan(1.0, 1.0, 0.01, field.n_terms)
    kernels.inertial_splitting_kernel(np.zeros(field.dim), np.zeros(field.dim), d, e,
                                      *plan, z, z, 1, rec)


def run_simulation(cfg: ExperimentConfig, field: SplittableField | None = None,
                   workers: int | None = None) -> SimulationResult:
    """Integrate the configured ensemble and estimate the diffusivity.

    Deterministic for a fixed (config, seed): the worker count changes only
    the wall time, never a single output bit.
    """
    cfg = validate_config(cfg)
    if cfg.n_paths < 2:
        raise ConfigError("paths: ensemble estimators need at least 2 paths")
    fld = resolve_field(cfg, field)
    snaps = snapshot_steps(cfg)
    times = snaps * cfg.dt
    horizon = float(snaps[-1] * cfg.dt)
    workers = default_workers() if workers is None else max(1, workers)
    _warm_kernels(cfg, fld)

    jobs = [(cfg, fld, start, min(start + CHUNK_PATHS, cfg.n_paths), snaps)
            for start in range(0, cfg.n_paths, CHUNK_PATHS)]
    dim = fld.dim
    sum_m = np.zeros((dim, dim))
    sum_m2 = np.zeros((dim, dim))
    sum_v = np.zeros(times.size)
    sum_v2 = np.zeros(times.size)
    sum_psi = np.zeros(times.size)
    sum_psi2 = np.zeros(times.size)
    for part in _map_chunks(_chunk_worker, jobs, workers):
        sum_m += part[0]
        sum_m2 += part[1]
        sum_v += part[2]
        sum_v2 += part[3]
        sum_psi += part[4]
        sum_psi2 += part[5]

    n = cfg.n_paths
    estimate = diffusivity_from_moments(sum_m, sum_m2, n, horizon)
    running = RunningSeries(times=times, values=sum_v / n,
                            stderr=_stderr(sum_v, sum_v2, n))
    psi = None
    if fld.has_stream_function:
        psi = RunningSeries(times=times, values=sum_psi / n,
                            stderr=_stderr(sum_psi, sum_psi2, n))
    return SimulationResult(config=cfg, estimate=estimate, running=running,
                            psi=psi, horizon=horizon)


def _stderr(s1: np.ndarray, s2: np.ndarray, n: int) -> np.ndarray:
    if n < 2:
        return np.full_like(np.asarray(s1, dtype=float), np.nan)
    var = (s2 - s1 * s1 / n) / (n - 1)
    return np.sqrt(np.maximum(var, 0.0) / n)


def run_sweep(base: ExperimentConfig, sweep: SweepSpec,
              field: SplittableField | None = None,
              workers: int | None = None) -> SweepResult:
    """One run per sweep value plus the requested K-entry power-law fit."""
    runs = []
    for cfg in sweep.configs(base):
        runs.append(run_simulation(cfg, field=field, workers=workers))
    idx = (0, 0) if sweep.fit_entry == "k11" else (1, 1)
    ys = [run.estimate.K[idx] for run in runs]
    fit = fit_power_law(np.asarray(sweep.values), np.asarray(ys))
    return SweepResult(parameter=sweep.parameter, values=tuple(sweep.values),
                       runs=tuple(runs), fit=fit, fit_entry=sweep.fit_entry)


# ---------------------------------------------------------------------------
# convergence study (coupled coarse vs refined reference on one Brownian path)

def _convergence_chunk(args):
    cfg, field, start, stop, dt = args
    d, e = field.d_mat, field.e_mat
    dim = field.dim
    steps = int(round(cfg.horizon / dt))
    refine = REFERENCE_REFINEMENT
    sup2 = []
    for idx in range(start, stop):
        streams = PathStreams.for_path(cfg.seed, idx)
        x0 = _initial_position(cfg, field, streams, idx)
        if cfg.sigma > 0.0:
            path = sample_brownian(streams.gamma, steps, dt, dim,
                                   refinements=int(math.log2(refine)))
            coarse_incr = path.values
            fine_incr = path.base
        else:
            coarse_incr = np.zeros((steps, dim))
            fine_incr = np.zeros((steps * refine, dim))
        rec_c = np.empty((steps, dim))
        rec_f = np.empty((steps, dim))
        xc = x0.copy()
        kernels.passive_splitting_kernel(xc, d, e, dt, coarse_incr, cfg.sigma, 1, rec_c)
        xf = x0.copy()
        kernels.passive_splitting_kernel(xf, d, e, dt / refine, fine_incr, cfg.sigma,
                                         refine, rec_f)
        if not (np.isfinite(rec_c).all() and np.isfinite(rec_f).all()):
            raise NumericalError(f"non-finite state in path {idx}")
        sup2.append(((rec_c - rec_f) ** 2).sum(axis=1).max())
    return np.asarray(sup2)


def run_convergence(cfg: ExperimentConfig, dt_list, field: SplittableField | None = None,
                    workers: int | None = None) -> SlopeReport:
    """Strong error of the splitting step against a 16x refined reference.

    Coarse and reference trajectories share one Brownian path per ensemble
    member (fine increments drawn first, pair-summed up to the coarse
    step), and the error is sup over the coarse grid in RMS over paths.
    """
    cfg = validate_config(cfg)
    if cfg.model != "passive" or cfg.integrator != "splitting":
        raise ConfigError("model: convergence study targets the passive splitting scheme")
    dts = [float(v) for v in dt_list]
    if len(dts) < 2:
        raise ConfigError("dt list: need at least 2 values to fit a slope")
    if any(v <= 0 or v >= cfg.horizon for v in dts):
        raise ConfigError("dt list: values must lie in (0, T)")
    fld = resolve_field(cfg, field)
    workers = default_workers() if workers is None else max(1, workers)
    _warm_pair_kernels(fld)
    errors = []
    for dt in dts:
        if abs(round(cfg.horizon / dt) * dt - cfg.horizon) > 1e-8 * max(1.0, cfg.horizon):
            raise ConfigError(f"dt list: horizon is not a multiple of dt = {dt}")
        jobs = [(cfg, fld, start, min(start + CHUNK_PATHS, cfg.n_paths), dt)
                for start in range(0, cfg.n_paths, CHUNK_PATHS)]
        sup2 = np.concatenate(list(_map_chunks(_convergence_chunk, jobs, workers)))
        errors.append(float(np.sqrt(sup2.mean())))
    fit = fit_power_law(np.asarray(dts), np.asarray(errors))
    return SlopeReport(parameter="dt", values=tuple(dts), errors=tuple(errors),
                       slope=fit.exponent, r_squared=fit.r_squared)


# ---------------------------------------------------------------------------
# small-inertia coupling study (shared gamma between passive and inertial)

def _coupling_chunk(args):
    cfg, field, start, stop, tau = args
    d, e = field.d_mat, field.e_mat
    dim = field.dim
    dt = cfg.dt
    steps = int(round(cfg.horizon / dt))
    scale = cfg.sigma * math.sqrt(dt)
    plan = kernels.inertial_plan(cfg.sigma, tau, dt, field.n_terms)
    sup2 = []
    for idx in range(start, stop):
        streams = PathStreams.for_path(cfg.seed, idx)
        x0 = _initial_position(cfg, field, streams, idx)
        xp = x0.copy()
        xi_state = x0.copy()
        y = np.zeros(dim)
        best = 0.0
        done = 0
        while done < steps:
            m = min(BLOCK_STEPS, steps - done)
            zg = streams.gamma.standard_normal((m, dim))
            zx = streams.xi.standard_normal((m, dim))
            rec_p = np.empty((m, dim))
            rec_i = np.empty((m, dim))
            kernels.passive_splitting_kernel(xp, d, e, dt, zg, scale, 1, rec_p)
            kernels.inertial_splitting_kernel(xi_state, y, d, e, *plan, zg, zx, 1, rec_i)
            block_max = float(((rec_p - rec_i) ** 2).sum(axis=1).max())
            best = max(best, block_max)
            done += m
        if not (np.isfinite(xp).all() and np.isfinite(xi_state).all()):
            raise NumericalError(f"non-finite state in path {idx}")
        sup2.append(best)
    return np.asarray(sup2)


def run_coupling(cfg: ExperimentConfig, tau_list, field: SplittableField | None = None,
                 workers: int | None = None) -> SlopeReport:
    """Sup-over-time RMS distance between coupled passive and inertial paths.

    For each tau both schemes consume the same gamma stream, the inertial
    one additionally its xi stream, per the shared-noise construction; the
    fitted slope of error versus tau verifies the sqrt(tau)/dt coupling law.
    """
    cfg = validate_config(cfg)
    if cfg.model != "passive" or cfg.integrator != "splitting":
        raise ConfigError("model: coupling study pairs passive and inertial splitting; "
                          "configure the passive base run")
    taus = [float(v) for v in tau_list]
    if len(taus) < 2 or len(set(taus)) < 2:
        raise ConfigError("tau list: need at least 2 distinct values to fit a slope")
    if any(v <= 0 for v in taus):
        raise ConfigError("tau list: values must be positive")
    fld = resolve_field(cfg, field)
    workers = default_workers() if workers is None else max(1, workers)
    _warm_pair_kernels(fld)
    n_steps(cfg)
    errors = []
    for tau in taus:
        jobs = [(cfg, fld, start, min(start + CHUNK_PATHS, cfg.n_paths), tau)
                for start in range(0, cfg.n_paths, CHUNK_PATHS)]
        sup2 = np.concatenate(list(_map_chunks(_coupling_chunk, jobs, workers)))
        errors.append(float(np.sqrt(sup2.mean())))
    fit = fit_power_law(np.asarray(taus), np.asarray(errors))
    return SlopeReport(parameter="tau", values=tuple(taus), errors=tuple(errors),
                       slope=fit.exponent, r_squared=fit.r_squared)
