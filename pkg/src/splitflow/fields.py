"""Periodic incompressible velocity fields with an exact shear splitting.

A field here is a finite sum

    v(x) = sum_j d_j * p_j(<e_j, x>)

of one-dimensional shear terms whose direction d_j is orthogonal to the
wave vector e_j.  Each term is integrable in closed form, which is the
structure the splitting integrators exploit.  Positions live in R^dim and
are never wrapped back into the period cell; periodicity is carried by the
trigonometric profiles themselves.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

ORTHOGONALITY_TOL = 1e-12


class FieldError(ValueError):
    """Raised for malformed field definitions or misuse of a field."""


# profile name -> (value, first derivative, second derivative), all scalar
# ufunc-compatible callables with 2*pi period
_PROFILES: dict[str, tuple[Callable, Callable, Callable]] = {
    "sine": (np.sin, np.cos, lambda s: -np.sin(s)),
}


def profile_functions(name: str) -> tuple[Callable, Callable, Callable]:
    try:
        return _PROFILES[name]
    except KeyError:
        raise FieldError(f"unknown profile {name!r}; registered: {sorted(_PROFILES)}")


def register_profile(name: str, value: Callable, deriv: Callable,
                     second: Callable | None = None) -> None:
    """Register a custom bounded Lipschitz 2*pi-periodic profile.

    `second` is only needed by the modified-equation diagnostics.
    """
    if name in _PROFILES:
        raise FieldError(f"profile {name!r} already registered")
    _PROFILES[name] = (value, deriv, second if second is not None else _no_second(name))


def _no_second(name):
    def fail(_s):
        raise FieldError(f"profile {name!r} has no second derivative registered")
    return fail


@dataclass(frozen=True, eq=False)
class SplitTerm:
    """One shear term d * p(<e, x>) with <d, e> = 0."""

    d: np.ndarray
    e: np.ndarray
    profile: str = "sine"

    def __post_init__(self):
        d = np.asarray(self.d, dtype=float)
        e = np.asarray(self.e, dtype=float)
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "e", e)
        if d.ndim != 1 or e.ndim != 1 or d.shape != e.shape:
            raise FieldError("d and e must be 1-d vectors of equal length")
        if not (np.all(np.isfinite(d)) and np.all(np.isfinite(e))):
            raise FieldError("d and e must be finite")
        if abs(float(d @ e)) > ORTHOGONALITY_TOL:
            raise FieldError(
                f"<d, e> = {float(d @ e):.3e} violates orthogonality (tol {ORTHOGONALITY_TOL})")
        profile_functions(self.profile)

    @property
    def dim(self) -> int:
        return self.d.shape[0]

    def value(self, s):
        return profile_functions(self.profile)[0](s)

    def deriv(self, s):
        return profile_functions(self.profile)[1](s)

    def second(self, s):
        return profile_functions(self.profile)[2](s)


@dataclass(frozen=True, eq=False)
class SplittableField:
    """Velocity field given by an ordered list of split terms.

    `d_mat` and `e_mat` stack the term vectors as (n_terms, dim) arrays for
    the integration kernels.  `stream_coeffs` holds per-term coefficients
    c_j such that Psi(x) = -sum_j c_j P_j(<e_j, x>) with P_j the profile
    antiderivative; it is only set for 2-d sine fields.
    """

    name: str
    dim: int
    terms: tuple[SplitTerm, ...]

    def __post_init__(self):
        if self.dim < 1:
            raise FieldError("dim must be positive")
        for t in self.terms:
            if t.dim != self.dim:
                raise FieldError(f"term dimension {t.dim} != field dimension {self.dim}")
        n = len(self.terms)
        d_mat = np.array([t.d for t in self.terms], dtype=float).reshape(n, self.dim)
        e_mat = np.array([t.e for t in self.terms], dtype=float).reshape(n, self.dim)
        object.__setattr__(self, "d_mat", d_mat)
        object.__setattr__(self, "e_mat", e_mat)
        object.__setattr__(self, "stream_coeffs", _stream_coefficients(self))

    @property
    def n_terms(self) -> int:
        return len(self.terms)

    @property
    def has_stream_function(self) -> bool:
        return self.stream_coeffs is not None

    @property
    def all_sine(self) -> bool:
        return all(t.profile == "sine" for t in self.terms)


def _stream_coefficients(field: SplittableField):
    """Coefficients of Psi for 2-d sine fields, or None.

    In 2-d orthogonality forces d_j parallel to perp(e_j) = (-e2, e1), say
    d_j = c_j * perp(e_j).  Then d_j sin(<e_j, x>) = curl^perp of
    -c_j cos(<e_j, x>), so Psi = -sum_j c_j cos(<e_j, x>).
    """
    if field.dim != 2 or not all(t.profile == "sine" for t in field.terms):
        return None
    coeffs = []
    for t in field.terms:
        perp = np.array([-t.e[1], t.e[0]])
        denom = float(perp @ perp)
        c = 0.0 if denom == 0.0 else float(t.d @ perp) / denom
        if not np.allclose(t.d, c * perp, atol=1e-12):
            return None
        coeffs.append(c)
    return np.asarray(coeffs)


def make_taylor_green() -> SplittableField:
    """The 2-d cellular flow with stream function sin(x1) sin(x2)."""
    return SplittableField(
        name="taylor-green",
        dim=2,
        terms=(
            SplitTerm(d=np.array([-0.5, 0.5]), e=np.array([1.0, 1.0])),
            SplitTerm(d=np.array([-0.5, -0.5]), e=np.array([1.0, -1.0])),
        ),
    )


def make_shear() -> SplittableField:
    """The unidirectional flow v(x) = (0, sin x1)."""
    return SplittableField(
        name="shear",
        dim=2,
        terms=(SplitTerm(d=np.array([0.0, 1.0]), e=np.array([1.0, 0.0])),),
    )


def make_zero() -> SplittableField:
    """v = 0, for free-diffusion sanity runs (single zero-amplitude term)."""
    return SplittableField(
        name="zero",
        dim=2,
        terms=(SplitTerm(d=np.array([0.0, 0.0]), e=np.array([1.0, 0.0])),),
    )


_BUILTIN_FIELDS = {
    "taylor-green": make_taylor_green,
    "shear": make_shear,
    "zero": make_zero,
}


def get_field(name: str) -> SplittableField:
    try:
        return _BUILTIN_FIELDS[name]()
    except KeyError:
        raise FieldError(f"unknown field {name!r}; built-ins: {sorted(_BUILTIN_FIELDS)}")


def builtin_field_names() -> tuple[str, ...]:
    return tuple(sorted(_BUILTIN_FIELDS))


def _check_point(field: SplittableField, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (field.dim,):
        raise FieldError(f"position has shape {x.shape}, field dimension is {field.dim}")
    return x


def eval_velocity(field: SplittableField, x) -> np.ndarray:
    """v(x) = sum_j d_j p_j(<e_j, x>)."""
    x = _check_point(field, x)
    v = np.zeros(field.dim)
    for t in field.terms:
        v += t.d * t.value(float(t.e @ x))
    return v


def eval_gradient(field: SplittableField, x) -> np.ndarray:
    """Gradient matrix with entries (i, k) = d v_i / d x_k."""
    x = _check_point(field, x)
    g = np.zeros((field.dim, field.dim))
    for t in field.terms:
        g += np.outer(t.d, t.e) * t.deriv(float(t.e @ x))
    return g


def eval_laplacian(field: SplittableField, x) -> np.ndarray:
    """Componentwise Laplacian, sum_j d_j |e_j|^2 p_j''(<e_j, x>)."""
    x = _check_point(field, x)
    out = np.zeros(field.dim)
    for t in field.terms:
        out += t.d * (float(t.e @ t.e) * t.second(float(t.e @ x)))
    return out


def stream_function(field: SplittableField, x) -> float:
    """Psi(x) with v = (-dPsi/dx2, dPsi/dx1); only for 2-d sine fields."""
    if not field.has_stream_function:
        raise FieldError(f"field {field.name!r} has no stream function")
    x = _check_point(field, x)
    s = field.e_mat @ x
    return float(-(field.stream_coeffs * np.cos(s)).sum())


def stream_function_many(field: SplittableField, xs: np.ndarray) -> np.ndarray:
    """Vectorized Psi over positions of shape (..., dim)."""
    if not field.has_stream_function:
        raise FieldError(f"field {field.name!r} has no stream function")
    s = np.asarray(xs, dtype=float) @ field.e_mat.T
    return -(np.cos(s) * field.stream_coeffs).sum(axis=-1)


def parse_field_text(text: str) -> SplittableField:
    """Build a field from a declarative description.

    Format, one statement per line (# starts a comment):

        name = my-field
        dim = 2
        term = d: -0.5 0.5 ; e: 1 1 ; profile: sine

    The profile clause is optional and defaults to sine.
    """
    name = "user-field"
    dim = None
    terms: list[SplitTerm] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise FieldError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip().lower()
        value = value.strip()
        if key == "name":
            name = value
        elif key == "dim":
            dim = int(value)
        elif key == "term":
            terms.append(_parse_term(value, lineno))
        else:
            raise FieldError(f"line {lineno}: unknown key {key!r}")
    if dim is None:
        if not terms:
            raise FieldError("field description needs a dim or at least one term")
        dim = terms[0].dim
    return SplittableField(name=name, dim=dim, terms=tuple(terms))


def _parse_term(value: str, lineno: int) -> SplitTerm:
    parts = {}
    for clause in value.split(";"):
        clause = clause.strip()
        if not clause:
            continue
        if ":" not in clause:
            raise FieldError(f"line {lineno}: term clause {clause!r} needs 'key: values'")
        k, _, v = clause.partition(":")
        parts[k.strip().lower()] = v.strip()
    if "d" not in parts or "e" not in parts:
        raise FieldError(f"line {lineno}: term needs both d and e vectors")
    try:
        d = np.array([float(tok) for tok in parts["d"].replace(",", " ").split()])
        e = np.array([float(tok) for tok in parts["e"].replace(",", " ").split()])
    except ValueError:
        raise FieldError(f"line {lineno}: could not parse term vectors")
    return SplitTerm(d=d, e=e, profile=parts.get("profile", "sine"))
