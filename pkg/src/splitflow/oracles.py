"""Independent ground truths and reference solvers for tests and validation.

Everything here stays off the production integration path: closed forms
are exact, the strong-order reference walks the pure-Python steppers, and
the backward-error check integrates the modified SDE with its own kernel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import kernels
from .config import ExperimentConfig
from .estimators import ExponentialRateFit, RunningSeries, fit_exponential_rate
from .fields import SplittableField, make_taylor_green, stream_function_many
from .integrators import splitting_step_passive
from .noise import BrownianIncrements, PathStreams
from .runner import (CHUNK_PATHS, _map_chunks, default_workers, run_simulation,
                     snapshot_steps)


@dataclass(frozen=True, eq=False)
class AnalyticDiffusivity:
    K: np.ndarray
    source: str  # "shear_passive" or "free_diffusion"


def shear_diffusivity_analytic(sigma: float) -> AnalyticDiffusivity:
    """diag(sigma^2/2, sigma^2/2 + 1/sigma^2) for the passive shear flow."""
    if sigma <= 0:
        raise ValueError("sigma must be > 0; the K22 entry diverges at sigma = 0")
    half = 0.5 * sigma * sigma
    return AnalyticDiffusivity(K=np.diag([half, half + 1.0 / (sigma * sigma)]),
                               source="shear_passive")


def free_diffusivity(sigma: float) -> AnalyticDiffusivity:
    """(sigma^2/2) I for vanishing velocity field."""
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    return AnalyticDiffusivity(K=0.5 * sigma * sigma * np.eye(2), source="free_diffusion")


def jacobian_determinant(map_fn, x, dt: float, h: float = 1e-6) -> float:
    """Central finite-difference Jacobian determinant of map_fn(x, dt).

    h = 1e-6 balances truncation against roundoff for the unit-determinant
    checks.
    """
    x = np.asarray(x, dtype=float)
    dim = x.shape[0]
    jac = np.empty((dim, dim))
    for k in range(dim):
        dx = np.zeros(dim)
        dx[k] = h
        jac[:, k] = (map_fn(x + dx, dt) - map_fn(x - dx, dt)) / (2.0 * h)
    return float(np.linalg.det(jac))


def reference_trajectory(field: SplittableField, sigma: float, x0, coarse_dt: float,
                         path: BrownianIncrements) -> np.ndarray:
    """Proxy for the exact solution: splitting on the finest grid of `path`.

    The Brownian path must have been sampled fine-first with the fine step
    at least 16x smaller than the coarse step under test, so both drivers
    share one realization.
    """
    fine_dt = path.dt_base
    ratio = coarse_dt / fine_dt
    if abs(ratio - round(ratio)) > 1e-9 or round(ratio) < 16:
        raise ValueError("fine step must divide the coarse step at least 16-fold")
    x = np.asarray(x0, dtype=float).copy()
    sq = math.sqrt(fine_dt)
    for incr in path.base:
        gamma = incr / sq
        x = splitting_step_passive(field, x, fine_dt, sigma, gamma)
    return x


@dataclass(frozen=True, eq=False)
class ModifiedEquationReport:
    """Backward-error comparison of coarse Euler against its modified SDE."""

    times: np.ndarray
    psi_euler: RunningSeries
    psi_modified: RunningSeries
    psi_splitting: RunningSeries
    rate_euler: ExponentialRateFit
    rate_modified: ExponentialRateFit
    rate_splitting: ExponentialRateFit

    @property
    def rate_ratio(self) -> float:
        """Euler decay rate over the modified-SDE prediction."""
        return self.rate_euler.rate / self.rate_modified.rate


_MODIFIED_SDE_SUBSTEPS = 100


def _modified_sde_chunk(args):
    field, sigma, dt_mod, h, start, stop, seed, snaps, x_start = args
    d, e = field.d_mat, field.e_mat
    dim = field.dim
    n_snap = snaps.shape[0]
    sum_psi = np.zeros(n_snap)
    sum_psi2 = np.zeros(n_snap)
    pos = np.empty((n_snap, dim))
    for idx in range(start, stop):
        streams = PathStreams.for_path(seed, idx)
        x = np.asarray(x_start, dtype=float).copy()
        done = 0
        for si, target in enumerate(snaps):
            while done < target:
                m = int(min(8192, target - done))
                z = streams.gamma.standard_normal((m, dim))
                kernels.modified_sde_euler_kernel(x, d, e, h, dt_mod, sigma, z)
                done += m
            pos[si] = x
        p = stream_function_many(field, pos)
        sum_psi += p
        sum_psi2 += p * p
    return sum_psi, sum_psi2


def modified_equation_check(sigma: float, dt_coarse: float, horizon: float,
                            n_paths: int, seed: int,
                            workers: int | None = None) -> ModifiedEquationReport:
    """Integrate the Taylor-Green modified SDE and compare stream decay rates.

    Runs three ensembles started at the stream-function maximum: the coarse
    Euler scheme, a fine Euler discretization (step dt_coarse/100) of the
    modified SDE with coefficients frozen at dt_coarse, and the splitting
    scheme.  The first two must agree within Monte Carlo error while both
    deviate from the splitting series once dt_coarse is large against
    sigma^2.
    """
    field = make_taylor_green()
    start_point = ((math.pi / 2.0, math.pi / 2.0),)
    base = ExperimentConfig(model="passive", field="taylor-green", dt=dt_coarse,
                            horizon=horizon, n_paths=n_paths, seed=seed,
                            sigma=sigma, initial_condition=start_point)
    workers = default_workers() if workers is None else max(1, workers)

    euler = run_simulation(replace(base, integrator="euler"), workers=workers)
    splitting = run_simulation(base, workers=workers)

    snaps = snapshot_steps(base) * _MODIFIED_SDE_SUBSTEPS
    h = dt_coarse / _MODIFIED_SDE_SUBSTEPS
    times = snaps * h
    x_start = np.array(start_point[0])
    # compile before forking
    kernels.modified_sde_euler_kernel(x_start.copy(), field.d_mat, field.e_mat,
                                      h, dt_coarse, sigma, np.zeros((1, field.dim)))
    jobs = [(field, sigma, dt_coarse, h, s, min(s + CHUNK_PATHS, n_paths), seed,
             snaps, x_start) for s in range(0, n_paths, CHUNK_PATHS)]
    sum_psi = np.zeros(times.size)
    sum_psi2 = np.zeros(times.size)
    for p1, p2 in _map_chunks(_modified_sde_chunk, jobs, workers):
        sum_psi += p1
        sum_psi2 += p2
    var = (sum_psi2 - sum_psi * sum_psi / n_paths) / (n_paths - 1)
    psi_modified = RunningSeries(times=times, values=sum_psi / n_paths,
                                 stderr=np.sqrt(np.maximum(var, 0.0) / n_paths))

    return ModifiedEquationReport(
        times=times,
        psi_euler=euler.psi,
        psi_modified=psi_modified,
        psi_splitting=splitting.psi,
        rate_euler=fit_exponential_rate(euler.psi),
        rate_modified=fit_exponential_rate(psi_modified),
        rate_splitting=fit_exponential_rate(splitting.psi),
    )
