"""Monte Carlo estimators: effective diffusivity, running diagnostics, fits.

The diffusivity is estimated from endpoint displacements at a fixed horizon
T as the ensemble mean of (dx (x) dx) / (2T); the running series exists to
verify that the plateau was reached.  All reductions are plain fixed-order
numpy sums over path-ordered arrays, so results do not depend on how the
ensemble was scheduled.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DIFFUSIVE_TIME_NEVER = np.inf


class EstimatorError(ValueError):
    """Raised for degenerate estimator inputs."""


@dataclass(frozen=True, eq=False)
class DiffusivityEstimate:
    """Estimated diffusivity matrix with entrywise Monte Carlo errors."""

    K: np.ndarray
    stderr: np.ndarray
    n_paths: int
    horizon: float

    def entry(self, i: int, j: int) -> tuple[float, float]:
        return float(self.K[i, j]), float(self.stderr[i, j])


@dataclass(frozen=True, eq=False)
class RunningSeries:
    """A statistic on a strictly increasing time grid."""

    times: np.ndarray
    values: np.ndarray
    stderr: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        if t.ndim != 1 or t.size == 0:
            raise EstimatorError("times must be a nonempty 1-d grid")
        if np.any(np.diff(t) <= 0):
            raise EstimatorError("times must be strictly increasing")
        if len(self.values) != t.size or len(self.stderr) != t.size:
            raise EstimatorError("series lengths must match the time grid")


@dataclass(frozen=True)
class PowerLawFit:
    """y = c * x**a fitted through log-log least squares."""

    exponent: float
    prefactor: float
    r_squared: float


def estimate_diffusivity(displacements: np.ndarray, horizon: float) -> DiffusivityEstimate:
    """K = mean over paths of (dx (x) dx) / (2T), symmetrized.

    `displacements` has shape (n_paths, dim); stderr is the entrywise
    sample standard deviation of the per-path terms over sqrt(n_paths).
    """
    disp = np.asarray(displacements, dtype=float)
    if disp.ndim != 2 or disp.shape[0] < 2:
        raise EstimatorError("need at least 2 displacement vectors")
    if horizon <= 0:
        raise EstimatorError("horizon must be > 0")
    n = disp.shape[0]
    per_path = disp[:, :, None] * disp[:, None, :] / (2.0 * horizon)
    k = per_path.mean(axis=0)
    k = 0.5 * (k + k.T)
    err = per_path.std(axis=0, ddof=1) / np.sqrt(n)
    return DiffusivityEstimate(K=k, stderr=err, n_paths=n, horizon=horizon)


def diffusivity_from_moments(sum_m: np.ndarray, sum_m2: np.ndarray, n_paths: int,
                             horizon: float) -> DiffusivityEstimate:
    """Assemble the estimate from per-path partial sums (runner fast path).

    sum_m and sum_m2 accumulate m_p = (dx (x) dx) / (2T) and its square in
    path order.
    """
    if n_paths < 2:
        raise EstimatorError("need at least 2 paths")
    k = sum_m / n_paths
    k = 0.5 * (k + k.T)
    var = (sum_m2 - sum_m * sum_m / n_paths) / (n_paths - 1)
    err = np.sqrt(np.maximum(var, 0.0) / n_paths)
    return DiffusivityEstimate(K=k, stderr=err, n_paths=n_paths, horizon=horizon)


def running_diffusivity(times: np.ndarray, displacements: np.ndarray) -> RunningSeries:
    """Ensemble mean of (x1(t) - x1(0))^2 / (2t) on the snapshot grid.

    `displacements` holds x(t) - x(0) with shape (n_paths, n_times, dim);
    the grid must start at a positive time.
    """
    t = np.asarray(times, dtype=float)
    if t.size and t[0] <= 0:
        raise EstimatorError("first grid time must be positive")
    disp = np.asarray(displacements, dtype=float)
    if disp.ndim != 3 or disp.shape[1] != t.size:
        raise EstimatorError("displacements must have shape (paths, times, dim)")
    v = disp[:, :, 0] ** 2 / (2.0 * t)
    n = disp.shape[0]
    return RunningSeries(times=t, values=v.mean(axis=0),
                         stderr=v.std(axis=0, ddof=1) / np.sqrt(n))


def estimate_diffusive_time(series: RunningSeries, band: float = 0.1) -> float:
    """Earliest time after which the series stays within band of its final value.

    Returns the +inf sentinel when the series never settles into the band
    (the ballistic signature).
    """
    if not 0.0 < band < 1.0:
        raise EstimatorError("band must be in (0, 1)")
    final = float(series.values[-1])
    tol = band * abs(final)
    inside = np.abs(series.values - final) <= tol
    # last index that violates the band determines the entry time
    bad = np.nonzero(~inside)[0]
    if bad.size == 0:
        return float(series.times[0])
    idx = int(bad[-1]) + 1
    if idx >= len(inside) - 1:
        # only the (trivially inside) final point is left: no plateau
        return DIFFUSIVE_TIME_NEVER
    return float(series.times[idx])


def fit_power_law(xs, ys) -> PowerLawFit:
    """Least squares for log y = a log x + log c."""
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.ndim != 1 or x.shape != y.shape or x.size < 2:
        raise EstimatorError("need >= 2 paired points")
    if np.any(x <= 0) or np.any(y <= 0):
        raise EstimatorError("power-law fit needs positive data")
    lx, ly = np.log(x), np.log(y)
    if np.ptp(lx) == 0.0:
        raise EstimatorError("degenerate design: all x equal")
    a, b = np.polyfit(lx, ly, 1)
    resid = ly - (a * lx + b)
    ss_tot = float(((ly - ly.mean()) ** 2).sum())
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - float((resid ** 2).sum()) / ss_tot
    return PowerLawFit(exponent=float(a), prefactor=float(np.exp(b)), r_squared=r2)


@dataclass(frozen=True)
class ExponentialRateFit:
    """|E psi| ~ c exp(-rate t) over the resolved window."""

    rate: float
    window: tuple[float, float]
    n_points: int


def mean_observable_series(times, values_per_path) -> RunningSeries:
    """Ensemble mean of an observable sampled per path on a common grid."""
    t = np.asarray(times, dtype=float)
    vals = np.asarray(values_per_path, dtype=float)
    if vals.ndim != 2 or vals.shape[1] != t.size:
        raise EstimatorError("observable values must have shape (paths, times)")
    n = vals.shape[0]
    return RunningSeries(times=t, values=vals.mean(axis=0),
                         stderr=vals.std(axis=0, ddof=1) / np.sqrt(n))


def fit_exponential_rate(series: RunningSeries, stderr_factor: float = 3.0) -> ExponentialRateFit:
    """Decay rate of |series| by regressing log|value| on t.

    Only grid points where |value| exceeds stderr_factor times its standard
    error enter the fit; the window ends at the first unresolved point.
    """
    resolved = np.abs(series.values) > stderr_factor * series.stderr
    end = int(np.argmin(resolved)) if not resolved.all() else len(resolved)
    if end < 2:
        raise EstimatorError("fewer than 2 resolved points; cannot fit a rate")
    t = series.times[:end]
    ly = np.log(np.abs(series.values[:end]))
    slope, _ = np.polyfit(t, ly, 1)
    return ExponentialRateFit(rate=-float(slope), window=(float(t[0]), float(t[-1])),
                              n_points=end)


def strong_error(paths_a: np.ndarray, paths_b: np.ndarray) -> float:
    """(E sup over saved times |x_a - x_b|^2)^(1/2) for coupled ensembles.

    Inputs have shape (n_paths, n_times, dim) on a common grid.
    """
    a = np.asarray(paths_a, dtype=float)
    b = np.asarray(paths_b, dtype=float)
    if a.shape != b.shape or a.ndim != 3:
        raise EstimatorError("coupled ensembles must share one (paths, times, dim) grid")
    sq = ((a - b) ** 2).sum(axis=2)
    return float(np.sqrt(sq.max(axis=1).mean()))
