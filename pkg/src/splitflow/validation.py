"""Quick oracle suite behind the `validate` CLI subcommand.

Each check pits an implementation piece against an independent route
(closed form, quadrature, finite differences or a short Monte Carlo) and
runs in seconds; the full acceptance protocols live in the test suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import ExperimentConfig
from .fields import (eval_gradient, eval_velocity, make_shear, make_taylor_green,
                     stream_function)
from .integrators import noise_coefficients, ou_transition, splitting_composition
from .oracles import free_diffusivity, jacobian_determinant, shear_diffusivity_analytic
from .runner import run_simulation


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def _check(name, passed, detail) -> CheckResult:
    return CheckResult(name=name, passed=bool(passed), detail=detail)


def check_field_identities() -> CheckResult:
    rng = np.random.default_rng(123)
    tg = make_taylor_green()
    sh = make_shear()
    worst = 0.0
    for _ in range(200):
        x = rng.uniform(-10, 10, 2)
        closed = np.array([-math.cos(x[1]) * math.sin(x[0]),
                           math.sin(x[1]) * math.cos(x[0])])
        worst = max(worst, float(np.abs(eval_velocity(tg, x) - closed).max()))
        worst = max(worst, abs(float(np.trace(eval_gradient(tg, x)))))
        worst = max(worst, abs(stream_function(tg, x) - math.sin(x[0]) * math.sin(x[1])))
        worst = max(worst, float(np.abs(eval_velocity(sh, x)
                                        - np.array([0.0, math.sin(x[0])])).max()))
    return _check("field closed forms and incompressibility", worst <= 1e-12,
                  f"max deviation {worst:.2e} (tol 1e-12)")


def check_volume_preservation() -> CheckResult:
    tg = make_taylor_green()
    rng = np.random.default_rng(7)

    def comp(x, dt):
        return splitting_composition(tg, x, dt)

    worst = 0.0
    for dt in (0.1, 0.01):
        for _ in range(50):
            det = jacobian_determinant(comp, rng.uniform(0, 2 * np.pi, 2), dt)
            worst = max(worst, abs(det - 1.0))
    return _check("deterministic composition is volume preserving", worst <= 1e-8,
                  f"max |det - 1| = {worst:.2e} (tol 1e-8)")


def check_noise_coefficients() -> CheckResult:
    worst = 0.0
    for sigma, tau, dt, n in ((1.0, 0.25, 0.1, 2), (0.3, 2.0, 0.01, 1), (2.0, 1e-4, 0.05, 2)):
        c = noise_coefficients(sigma, tau, dt, n)
        theta = (n + 1) * tau
        s = np.linspace(0.0, dt, 20001)
        w_x = 1.0 - np.exp(-(dt - s) / theta)
        w_y = np.exp(-(dt - s) / theta)
        var_x = sigma ** 2 * np.trapezoid(w_x ** 2, s)
        var_y = sigma ** 2 / tau * np.trapezoid(w_y ** 2, s)
        cov = sigma ** 2 / math.sqrt(tau) * np.trapezoid(w_x * w_y, s)
        worst = max(worst,
                    abs(c.beta ** 2 - var_y) / var_y,
                    abs(c.alpha * c.beta - cov) / cov,
                    abs(c.alpha ** 2 + c.delta_g ** 2 - var_x) / var_x)
    return _check("inertial noise triple matches Ito quadrature", worst <= 1e-6,
                  f"max relative deviation {worst:.2e} (tol 1e-6)")


def check_ou_transition() -> CheckResult:
    dc, dt = 0.5, 0.25
    tr = ou_transition(dc, dt)
    rng = np.random.default_rng(42)
    n, sub = 200_000, 400
    h = dt / sub
    eta = np.zeros(n)
    integ = np.zeros(n)
    for _ in range(sub):
        integ += eta * h
        eta += -eta / dc * h + rng.standard_normal(n) * math.sqrt(h / dc)
    var_e = tr.l11 ** 2
    cov = tr.l11 * tr.l21
    var_i = tr.l21 ** 2 + tr.l22 ** 2
    devs = (abs(eta.var() - var_e) / var_e,
            abs(np.mean(eta * integ) - cov) / cov,
            abs(integ.var() - var_i) / var_i)
    worst = max(devs)
    return _check("OU joint transition matches fine-Euler Monte Carlo", worst <= 0.02,
                  f"max relative deviation {worst:.2e} (tol 2e-2, Euler bias included)")


def check_free_diffusion() -> CheckResult:
    cfg = ExperimentConfig(model="passive", field="zero", dt=0.05, horizon=50.0,
                           n_paths=4000, seed=2024, sigma=1.0)
    res = run_simulation(cfg)
    target = free_diffusivity(1.0).K
    dev = np.abs(res.estimate.K - target)
    ok = bool((dev <= 3.0 * res.estimate.stderr + 1e-12).all())
    return _check("free diffusion recovers K = sigma^2/2 I", ok,
                  f"max |K - 0.5 I| = {dev.max():.3e}, 3 stderr = {3 * res.estimate.stderr.max():.3e}")


def check_shear_analytic() -> CheckResult:
    cfg = ExperimentConfig(model="passive", field="shear", dt=0.01, horizon=200.0,
                           n_paths=2000, seed=99, sigma=1.0)
    res = run_simulation(cfg)
    target = shear_diffusivity_analytic(1.0).K
    k22, err22 = res.estimate.entry(1, 1)
    ok = abs(k22 - target[1, 1]) <= max(3.0 * err22, 0.05 * target[1, 1])
    return _check("shear flow matches the analytic diffusivity", ok,
                  f"K22 = {k22:.4f} vs {target[1, 1]:.4f} (3 stderr = {3 * err22:.4f})")


ALL_CHECKS = (
    check_field_identities,
    check_volume_preservation,
    check_noise_coefficients,
    check_ou_transition,
    check_free_diffusion,
    check_shear_analytic,
)


def run_validation() -> list[CheckResult]:
    return [fn() for fn in ALL_CHECKS]
