"""Numba hot loops for the ensemble drivers.

Each kernel advances one path through a block of steps, consuming
pre-generated standard normals (or Brownian increments) and mutating the
state arrays in place.  The arithmetic mirrors the reference steppers in
`integrators` operation for operation, so a kernel trajectory is
bit-identical to the reference one given the same draws; the equivalence
is pinned by tests.

`record_stride > 0` stores the position after every stride-th step into
`record` (shape (m // stride, dim)), which the convergence and coupling
studies use for sup-over-time errors.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

from .integrators import noise_coefficients, ou_transition

_f8 = np.float64

NO_RECORD = np.zeros((1, 1), dtype=_f8)


def inertial_plan(sigma: float, tau: float, dt: float, n: int) -> tuple:
    """Scalar constants consumed by inertial_splitting_kernel.

    Matches the factorizations used in the reference stepper so kernel and
    reference trajectories agree bitwise.
    """
    theta = (n + 1) * tau
    sqtau = math.sqrt(tau)
    u = -math.expm1(-dt / theta)
    su = sqtau * u
    half_t = 0.5 * dt
    thu = theta * u
    edec = 1.0 - u
    ymul = (n + 1) * sqtau * u
    c = noise_coefficients(sigma, tau, dt, n)
    return su, half_t, thu, edec, ymul, c.alpha, c.beta, c.delta_g


def colored_plan(sigma: float, corr_time: float, dt: float) -> tuple:
    """Scalar constants consumed by colored_splitting_kernel."""
    tr = ou_transition(corr_time, dt)
    return tr.decay, tr.mean_i, tr.l11, tr.l21, tr.l22, sigma / math.sqrt(corr_time)


def inertial_euler_plan(sigma: float, tau: float, dt: float) -> tuple:
    return math.sqrt(tau), dt / tau, (sigma / tau) * math.sqrt(dt)


@njit(cache=True)
def passive_splitting_kernel(x, d, e, dt, noise, noise_scale, record_stride, record):
    nterms, dim = d.shape
    m = noise.shape[0]
    for k in range(m):
        for j in range(nterms):
            s = 0.0
            for i in range(dim):
                s += e[j, i] * x[i]
            coef = dt * np.sin(s)
            for i in range(dim):
                x[i] += coef * d[j, i]
        for i in range(dim):
            x[i] += noise_scale * noise[k, i]
        if record_stride > 0 and (k + 1) % record_stride == 0:
            r = (k + 1) // record_stride - 1
            for i in range(dim):
                record[r, i] = x[i]


@njit(cache=True)
def passive_euler_kernel(x, d, e, dt, noise, noise_scale, record_stride, record):
    nterms, dim = d.shape
    m = noise.shape[0]
    v = np.empty(dim, dtype=_f8)
    for k in range(m):
        for i in range(dim):
            v[i] = 0.0
        for j in range(nterms):
            s = 0.0
            for i in range(dim):
                s += e[j, i] * x[i]
            vj = np.sin(s)
            for i in range(dim):
                v[i] += d[j, i] * vj
        for i in range(dim):
            x[i] = x[i] + dt * v[i] + noise_scale * noise[k, i]
        if record_stride > 0 and (k + 1) % record_stride == 0:
            r = (k + 1) // record_stride - 1
            for i in range(dim):
                record[r, i] = x[i]


@njit(cache=True)
def inertial_splitting_kernel(x, y, d, e, su, half_t, thu, edec, ymul,
                              alpha, beta, delta_g, z_gamma, z_xi,
                              record_stride, record):
    nterms, dim = d.shape
    m = z_gamma.shape[0]
    for k in range(m):
        for j in range(nterms):
            s0 = 0.0
            s1 = 0.0
            for i in range(dim):
                s0 += e[j, i] * x[i]
                s1 += e[j, i] * (x[i] + su * y[i])
            v0 = np.sin(s0)
            v1 = np.sin(s1)
            coef_x = half_t * (v0 + v1) - thu * v0
            coef_y = ymul * v0
            for i in range(dim):
                xn = x[i] + su * y[i] + coef_x * d[j, i]
                yn = edec * y[i] + coef_y * d[j, i]
                x[i] = xn
                y[i] = yn
        for i in range(dim):
            x[i] += su * y[i]
            y[i] = edec * y[i]
        for i in range(dim):
            x[i] = x[i] + alpha * z_xi[k, i] + delta_g * z_gamma[k, i]
            y[i] = y[i] + beta * z_xi[k, i]
        if record_stride > 0 and (k + 1) % record_stride == 0:
            r = (k + 1) // record_stride - 1
            for i in range(dim):
                record[r, i] = x[i]


@njit(cache=True)
def inertial_euler_kernel(x, y, d, e, dt, sqtau, dt_over_tau, signoise, z_xi,
                          record_stride, record):
    nterms, dim = d.shape
    m = z_xi.shape[0]
    v = np.empty(dim, dtype=_f8)
    u = np.empty(dim, dtype=_f8)
    for k in range(m):
        for i in range(dim):
            u[i] = y[i] / sqtau
            v[i] = 0.0
        for j in range(nterms):
            s = 0.0
            for i in range(dim):
                s += e[j, i] * x[i]
            vj = np.sin(s)
            for i in range(dim):
                v[i] += d[j, i] * vj
        for i in range(dim):
            xn = x[i] + dt * u[i]
            un = u[i] + (v[i] - u[i]) * dt_over_tau + signoise * z_xi[k, i]
            x[i] = xn
            y[i] = sqtau * un
        if record_stride > 0 and (k + 1) % record_stride == 0:
            r = (k + 1) // record_stride - 1
            for i in range(dim):
                record[r, i] = x[i]


@njit(cache=True)
def colored_splitting_kernel(x, eta, d, e, dt, decay, mean_i, l11, l21, l22,
                             noise_scale, z_eta, z_int, record_stride, record):
    nterms, dim = d.shape
    m = z_eta.shape[0]
    for k in range(m):
        for j in range(nterms):
            s = 0.0
            for i in range(dim):
                s += e[j, i] * x[i]
            coef = dt * np.sin(s)
            for i in range(dim):
                x[i] += coef * d[j, i]
        for i in range(dim):
            z1 = z_eta[k, i]
            z2 = z_int[k, i]
            integral = mean_i * eta[i] + l21 * z1 + l22 * z2
            eta[i] = decay * eta[i] + l11 * z1
            x[i] = x[i] + noise_scale * integral
        if record_stride > 0 and (k + 1) % record_stride == 0:
            r = (k + 1) // record_stride - 1
            for i in range(dim):
                record[r, i] = x[i]


@njit(cache=True)
def modified_splitting_kernel(x, d, e, dt, tau_dt, sqnoise, noise,
                              record_stride, record):
    nterms, dim = d.shape
    m = noise.shape[0]
    v = np.empty(dim, dtype=_f8)
    g = np.empty((dim, dim), dtype=_f8)
    for k in range(m):
        for j in range(nterms):
            s = 0.0
            for i in range(dim):
                s += e[j, i] * x[i]
            coef = dt * np.sin(s)
            for i in range(dim):
                x[i] += coef * d[j, i]
        # drift correction -tau (grad v) v dt at the composed point
        for i in range(dim):
            v[i] = 0.0
            for kk in range(dim):
                g[i, kk] = 0.0
        for j in range(nterms):
            s = 0.0
            for i in range(dim):
                s += e[j, i] * x[i]
            vj = np.sin(s)
            dj = np.cos(s)
            for i in range(dim):
                v[i] += d[j, i] * vj
                for kk in range(dim):
                    g[i, kk] += d[j, i] * e[j, kk] * dj
        for i in range(dim):
            gv = 0.0
            for kk in range(dim):
                gv += g[i, kk] * v[kk]
            x[i] = x[i] - tau_dt * gv
        for i in range(dim):
            x[i] += sqnoise * noise[k, i]
        if record_stride > 0 and (k + 1) % record_stride == 0:
            r = (k + 1) // record_stride - 1
            for i in range(dim):
                record[r, i] = x[i]


@njit(cache=True)
def modified_sde_euler_kernel(x, d, e, h, dt_mod, sigma, noise):
    """Euler steps of the Euler-scheme modified SDE at inner step h.

    Drift v - (dt_mod/2)(grad v) v - (sigma^2 dt_mod/4) lap v and diffusion
    sigma (I - (dt_mod/2) grad v^T), with the sine-profile Laplacian
    lap v = -sum_j d_j |e_j|^2 sin(<e_j, x>).
    """
    nterms, dim = d.shape
    m = noise.shape[0]
    v = np.empty(dim, dtype=_f8)
    lap = np.empty(dim, dtype=_f8)
    g = np.empty((dim, dim), dtype=_f8)
    sqh = np.sqrt(h)
    for k in range(m):
        for i in range(dim):
            v[i] = 0.0
            lap[i] = 0.0
            for kk in range(dim):
                g[i, kk] = 0.0
        for j in range(nterms):
            s = 0.0
            e2 = 0.0
            for i in range(dim):
                s += e[j, i] * x[i]
                e2 += e[j, i] * e[j, i]
            vj = np.sin(s)
            dj = np.cos(s)
            for i in range(dim):
                v[i] += d[j, i] * vj
                lap[i] += d[j, i] * (-e2 * vj)
                for kk in range(dim):
                    g[i, kk] += d[j, i] * e[j, kk] * dj
        for i in range(dim):
            gv = 0.0
            bz = 0.0
            for kk in range(dim):
                gv += g[i, kk] * v[kk]
                eye = 1.0 if i == kk else 0.0
                bz += sigma * (eye - 0.5 * dt_mod * g[kk, i]) * noise[k, kk]
            drift = v[i] - 0.5 * dt_mod * gv - 0.25 * sigma * sigma * dt_mod * lap[i]
            x[i] = x[i] + h * drift + sqh * bz
