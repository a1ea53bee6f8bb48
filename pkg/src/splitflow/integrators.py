"""One-step maps for the four particle models, splitting and Euler variants.

All steppers are pure functions of (state, parameters, random draws).  The
splitting maps compose the exactly integrable shear sub-flows of the field
with an exact Gaussian noise step; with zero noise the composition is
volume preserving.  These are the reference implementations; `kernels`
mirrors them operation for operation for the ensemble drivers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fields import SplittableField, SplitTerm, eval_gradient, eval_laplacian, eval_velocity


@dataclass(frozen=True, eq=False)
class TracerState:
    """Passive tracer: unwrapped position."""

    x: np.ndarray


@dataclass(frozen=True, eq=False)
class InertialState:
    """Inertial particle: position and scaled momentum y = sqrt(tau) * xdot."""

    x: np.ndarray
    y: np.ndarray


@dataclass(frozen=True, eq=False)
class ColoredState:
    """Colored-noise tracer: position and the OU driving state."""

    x: np.ndarray
    eta: np.ndarray


@dataclass(frozen=True)
class NoiseCoefficients:
    """(alpha, beta, delta_g) of the exact inertial noise increment.

    The increment added after the deterministic maps is
    (alpha*xi + delta_g*gamma, beta*xi) with xi, gamma i.i.d. N(0, I).
    delta_g is the position-noise coefficient; the OU correlation time of
    the colored model is a different delta and is named corr_time there.
    """

    alpha: float
    beta: float
    delta_g: float


def noise_coefficients(sigma: float, tau: float, dt: float, n: int) -> NoiseCoefficients:
    """Solve the triangular system for the inertial noise triple.

    With theta = (n+1)*tau and u = 1 - exp(-dt/theta):

        beta^2          = (n+1) sigma^2 / 2 * (1 - exp(-2 dt/theta))
        beta * alpha    = sigma^2 sqrt(tau) (n+1) / 2 * u^2
        alpha^2+delta^2 = sigma^2 (dt - 2 theta u + theta/2 (1 - exp(-2 dt/theta)))

    solved as beta, then alpha, then delta_g.  The variance sum is
    rearranged to sigma^2 (dt - theta*u - theta*u^2/2), which is exact and
    avoids the catastrophic cancellation of the displayed form for
    dt << theta.
    """
    if tau <= 0 or dt <= 0:
        raise ValueError("need tau > 0 and dt > 0")
    if n < 1:
        raise ValueError("need at least one split term")
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    if sigma == 0.0:
        return NoiseCoefficients(0.0, 0.0, 0.0)
    theta = (n + 1) * tau
    u1 = -math.expm1(-dt / theta)
    u2 = -math.expm1(-2.0 * dt / theta)
    var_y = 0.5 * (n + 1) * sigma * sigma * u2
    cov_xy = 0.5 * sigma * sigma * math.sqrt(tau) * (n + 1) * u1 * u1
    var_x = sigma * sigma * (dt - theta * u1 - 0.5 * theta * u1 * u1)
    beta = math.sqrt(var_y)
    alpha = cov_xy / beta
    radicand = var_x - alpha * alpha
    if radicand < 0.0:
        # Cauchy-Schwarz guarantees >= 0; tiny negatives are roundoff
        if radicand < -1e-14 * max(1.0, var_x):
            raise ArithmeticError(
                f"noise coefficient radicand {radicand:.3e} is negative beyond roundoff")
        radicand = 0.0
    delta_g = math.sqrt(radicand)
    out = NoiseCoefficients(alpha, beta, delta_g)
    if not all(map(math.isfinite, (alpha, beta, delta_g))):
        raise ArithmeticError(f"non-finite noise coefficients {out} "
                              f"for sigma={sigma}, tau={tau}, dt={dt}, n={n}")
    return out


def phi_j_step(term: SplitTerm, x: np.ndarray, t: float) -> np.ndarray:
    """Exact flow of one shear sub-equation: x + t * d * p(<e, x>).

    Conserves <e, x> exactly and has unit Jacobian determinant.
    """
    if t < 0:
        raise ValueError("t must be >= 0")
    x = np.asarray(x, dtype=float)
    return x + (t * term.value(float(term.e @ x))) * term.d


def splitting_composition(field: SplittableField, x: np.ndarray, dt: float) -> np.ndarray:
    """phi_n o ... o phi_1, the volume-preserving deterministic map."""
    for term in field.terms:
        x = phi_j_step(term, x, dt)
    return x


def splitting_step_passive(field: SplittableField, x: np.ndarray, dt: float,
                           sigma: float, gamma: np.ndarray) -> np.ndarray:
    """One splitting step: deterministic composition plus sigma*sqrt(dt)*gamma."""
    if dt <= 0:
        raise ValueError("dt must be > 0")
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    x = splitting_composition(field, np.asarray(x, dtype=float), dt)
    return x + (sigma * math.sqrt(dt)) * np.asarray(gamma, dtype=float)


def euler_step_passive(field: SplittableField, x: np.ndarray, dt: float,
                       sigma: float, gamma: np.ndarray) -> np.ndarray:
    """Euler-Maruyama baseline: x + v(x) dt + sigma*sqrt(dt)*gamma."""
    if dt < 0:
        raise ValueError("dt must be >= 0")
    x = np.asarray(x, dtype=float)
    return x + dt * eval_velocity(field, x) + (sigma * math.sqrt(dt)) * np.asarray(gamma, dtype=float)


def lambda_map(x: np.ndarray, y: np.ndarray, t: float, tau: float,
               n: int) -> tuple[np.ndarray, np.ndarray]:
    """Free decay of the scaled-momentum system over time t.

    (x, y) -> (x + sqrt(tau) (1 - exp(-t/theta)) y, y exp(-t/theta)) with
    theta = (n+1) tau.
    """
    if tau <= 0:
        raise ValueError("tau must be > 0")
    if t < 0:
        raise ValueError("t must be >= 0")
    theta = (n + 1) * tau
    u = -math.expm1(-t / theta)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return x + (math.sqrt(tau) * u) * y, (1.0 - u) * y


def tilde_phi_j_step(term: SplitTerm, x: np.ndarray, y: np.ndarray, t: float,
                     tau: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Quadrature approximation of one inertial sub-flow.

    The exact sub-flow is lambda plus two convolution integrals of
    f(s) = d * p(<e, x(s)>).  The convolution against exp(-(t-s)/theta) is
    approximated with a one-point rule as theta*(1 - exp(-t/theta))*d*p0 (a
    gain for y, a loss for x), and the plain integral of f in the position
    with the trapezoid rule between <e, x> and the endpoint
    <e, x + sqrt(tau)(1 - exp(-t/theta)) y>.  Single-step error is O(t^2)
    uniformly in tau, and the map reduces to phi_j as tau -> 0.
    """
    if tau <= 0:
        raise ValueError("tau must be > 0")
    if t < 0:
        raise ValueError("t must be >= 0")
    theta = (n + 1) * tau
    sqtau = math.sqrt(tau)
    u = -math.expm1(-t / theta)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    v0 = term.value(float(term.e @ x))
    v1 = term.value(float(term.e @ (x + (sqtau * u) * y)))
    coef_x = 0.5 * t * (v0 + v1) - theta * u * v0
    x_new = x + (sqtau * u) * y + coef_x * term.d
    y_new = (1.0 - u) * y + ((n + 1) * sqtau * u * v0) * term.d
    return x_new, y_new


def splitting_step_inertial(field: SplittableField, state: InertialState, dt: float,
                            sigma: float, tau: float, xi: np.ndarray,
                            gamma: np.ndarray) -> InertialState:
    """Inertial splitting step: tilde_phi_1..n, then lambda, then the noise.

    The noise increment (alpha*xi + delta_g*gamma, beta*xi) samples the
    exact law of the final OU sub-step, so the scheme has no stability
    restriction on dt/tau.
    """
    if dt <= 0:
        raise ValueError("dt must be > 0")
    n = field.n_terms
    x, y = state.x, state.y
    for term in field.terms:
        x, y = tilde_phi_j_step(term, x, y, dt, tau, n)
    x, y = lambda_map(x, y, dt, tau, n)
    coeff = noise_coefficients(sigma, tau, dt, n)
    xi = np.asarray(xi, dtype=float)
    gamma = np.asarray(gamma, dtype=float)
    return InertialState(x=x + coeff.alpha * xi + coeff.delta_g * gamma,
                         y=y + coeff.beta * xi)


def euler_step_inertial(field: SplittableField, state: InertialState, dt: float,
                        sigma: float, tau: float, xi: np.ndarray) -> InertialState:
    """Euler-Maruyama on (x, u = xdot); stable only for dt = O(tau).

    Internally integrates the physical velocity u and converts back to the
    scaled momentum y = sqrt(tau) * u at the state boundary.
    """
    if dt <= 0 or tau <= 0:
        raise ValueError("need dt > 0 and tau > 0")
    sqtau = math.sqrt(tau)
    x = state.x
    u = state.y / sqtau
    x_new = x + dt * u
    u_new = u + (eval_velocity(field, x) - u) * (dt / tau) \
        + (sigma / tau) * math.sqrt(dt) * np.asarray(xi, dtype=float)
    return InertialState(x=x_new, y=sqtau * u_new)


@dataclass(frozen=True)
class OUTransition:
    """Precomputed one-step law of (eta(t+dt), int_t^{t+dt} eta ds).

    For the OU process etadot = -eta/dc + W'/sqrt(dc), conditioned on
    eta(t), the pair is Gaussian with

        E[eta']  = eta E,          E[I] = eta dc u,
        Var(eta') = u(2-u)/2,      Cov(eta', I) = dc u^2 / 2,
        Var(I)    = dc (dt - dc u - dc u^2 / 2),

    where E = exp(-dt/dc) and u = 1 - E.  l11, l21, l22 are the Cholesky
    factors of the covariance.
    """

    decay: float
    mean_i: float
    l11: float
    l21: float
    l22: float


def ou_transition(corr_time: float, dt: float) -> OUTransition:
    if corr_time <= 0 or dt <= 0:
        raise ValueError("need corr_time > 0 and dt > 0")
    dc = corr_time
    u = -math.expm1(-dt / dc)
    var_e = 0.5 * u * (2.0 - u)
    cov = 0.5 * dc * u * u
    var_i = dc * (dt - dc * u - 0.5 * dc * u * u)
    l11 = math.sqrt(var_e)
    l21 = cov / l11
    l22 = math.sqrt(max(var_i - l21 * l21, 0.0))
    return OUTransition(decay=1.0 - u, mean_i=dc * u, l11=l11, l21=l21, l22=l22)


def ou_joint_sample(corr_time: float, dt: float, eta: np.ndarray,
                    rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Exact draw of (eta(t+dt), integral of eta over the step).

    Componentwise-independent bivariate Gaussians; consumes dim draws for
    eta' followed by dim draws for the integral.
    """
    tr = ou_transition(corr_time, dt)
    eta = np.asarray(eta, dtype=float)
    z1 = rng.standard_normal(eta.shape)
    z2 = rng.standard_normal(eta.shape)
    eta_next = tr.decay * eta + tr.l11 * z1
    integral = tr.mean_i * eta + tr.l21 * z1 + tr.l22 * z2
    return eta_next, integral


def splitting_step_colored(field: SplittableField, state: ColoredState, dt: float,
                           sigma: float, corr_time: float,
                           rng: np.random.Generator) -> ColoredState:
    """Colored-noise step: deterministic composition, then the exact OU pair.

    The position gains (sigma / sqrt(corr_time)) times the exactly sampled
    integral of the driving OU process.
    """
    if dt <= 0:
        raise ValueError("dt must be > 0")
    x = splitting_composition(field, state.x, dt)
    eta_next, integral = ou_joint_sample(corr_time, dt, state.eta, rng)
    x = x + (sigma / math.sqrt(corr_time)) * integral
    return ColoredState(x=x, eta=eta_next)


def modified_tracers_step(field: SplittableField, x: np.ndarray, dt: float,
                          tau: float, gamma: np.ndarray) -> np.ndarray:
    """Small-inertia model step: composition, drift correction, noise.

    x1 = (phi_n o ... o phi_1)(x, dt); x2 = x1 - tau (grad v(x1)) v(x1) dt;
    returns x2 + sqrt(tau) sqrt(dt) gamma.
    """
    if dt <= 0:
        raise ValueError("dt must be > 0")
    if tau < 0:
        raise ValueError("tau must be >= 0")
    x1 = splitting_composition(field, np.asarray(x, dtype=float), dt)
    x2 = x1 - (tau * dt) * (eval_gradient(field, x1) @ eval_velocity(field, x1))
    return x2 + (math.sqrt(tau) * math.sqrt(dt)) * np.asarray(gamma, dtype=float)


def modified_equation_coefficients(field: SplittableField, x: np.ndarray, dt: float,
                                   sigma: float) -> tuple[np.ndarray, np.ndarray]:
    """Drift and diffusion of the Euler scheme's modified equation.

    drift = v - (dt/2) (grad v) v - (sigma^2 dt / 4) lap v and
    diffusion = sigma (I - (dt/2) grad v^T), evaluated at x.  For the sine
    profile lap v = -sum_j d_j |e_j|^2 p(<e_j, x>).
    """
    if dt < 0:
        raise ValueError("dt must be >= 0")
    x = np.asarray(x, dtype=float)
    v = eval_velocity(field, x)
    grad = eval_gradient(field, x)
    drift = v - (0.5 * dt) * (grad @ v) - (0.25 * sigma * sigma * dt) * eval_laplacian(field, x)
    diffusion = sigma * (np.eye(field.dim) - (0.5 * dt) * grad.T)
    return drift, diffusion
