"""Diffusion specification, Lamperti transform, and the scalar functions used by every density formula.

The state-dependent volatility is sigma(x) = x^a (1-x)^b on [0,1].  The
transform F(x) = int_0^x du/sigma(u) maps the process to unit volatility;
for the square-root case (a = b = 1/2) it is 2*arcsin(sqrt(x)) with inverse
sin^2(y/2).  All functions accept scalars or numpy arrays in their state
argument and are pure, so they are safe to call from any number of workers.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize

from .errors import DomainError, ParameterError, QuadratureError, SingularityError

#: Overflow cap applied to nu/big_v near the boundary singularities.
NU_CAP_DEFAULT = 1e12

#: Offset (in the transformed coordinate) at which Monte Carlo paths that
#: leave the open interval are pinned before evaluating the potential.
BOUNDARY_OFFSET = 1e-6

_QUAD_ABS_TOL = 1e-10


@dataclass(frozen=True)
class DiffusionSpec:
    """Volatility exponents and drift parameters of one diffusion on [0,1].

    dX = drift(X) dt + X^a (1-X)^b dW.  a = b = 1/2 with zero drift is the
    classical Wright-Fisher diffusion; (alpha, h) add selection, (beta1,
    beta2) add mutation.  Drift terms are only supported on the a = b = 1/2
    volatility, and mixing selection with mutation is not supported.
    """

    a: float = 0.5
    b: float = 0.5
    alpha: float = 0.0
    h: float = 0.0
    beta1: float = 0.0
    beta2: float = 0.0

    def __post_init__(self):
        if not (0.0 < self.a <= 1.0 and 0.0 < self.b <= 1.0):
            raise ParameterError(
                f"volatility exponents must satisfy 0 < a, b <= 1, got a={self.a}, b={self.b}"
            )
        if self.beta1 < 0.0 or self.beta2 < 0.0:
            raise ParameterError("mutation rates beta1, beta2 must be >= 0")

    @classmethod
    def neutral(cls) -> "DiffusionSpec":
        """The driftless square-root-volatility case (classical W-F)."""
        return cls()

    @property
    def is_square_root(self) -> bool:
        return self.a == 0.5 and self.b == 0.5

    @property
    def has_mutation(self) -> bool:
        return self.beta1 > 0.0 or self.beta2 > 0.0

    @property
    def has_selection(self) -> bool:
        return self.alpha != 0.0 or self.h != 0.0

    def regime(self) -> str:
        """One of 'neutral', 'mutation', 'selection'.

        Raises ParameterError for combined drift regimes or for drift on a
        non-square-root volatility, neither of which has a closed form here.
        """
        if self.has_mutation and self.has_selection:
            raise ParameterError("combined mutation+selection drift is not supported")
        if (self.has_mutation or self.has_selection) and not self.is_square_root:
            raise ParameterError("drift terms are only supported for a = b = 1/2")
        if self.has_mutation:
            return "mutation"
        if self.has_selection:
            return "selection"
        return "neutral"


@dataclass(frozen=True)
class TransformPoint:
    """A frequency x in [0,1] paired with its transformed coordinate y = F(x)."""

    x: float
    y: float

    @classmethod
    def from_x(cls, spec: DiffusionSpec, x: float) -> "TransformPoint":
        return cls(x=float(x), y=float(lamperti_forward(spec, x)))

    @classmethod
    def from_y(cls, spec: DiffusionSpec, y: float) -> "TransformPoint":
        return cls(x=float(lamperti_inverse(spec, y)), y=float(y))


def _as_array(x):
    arr = np.asarray(x, dtype=float)
    return arr, arr.ndim == 0


def _maybe_scalar(arr, scalar):
    return float(arr) if scalar else arr


def sigma(spec: DiffusionSpec, x):
    """Volatility x^a (1-x)^b; exactly 0 at the boundary points."""
    arr, scalar = _as_array(x)
    if np.any(arr < 0.0) or np.any(arr > 1.0):
        raise DomainError(f"frequency outside [0,1]: {x}")
    # 0^a == 0 for the a > 0 enforced by the constructor, so no masking needed
    out = arr**spec.a * (1.0 - arr) ** spec.b
    return _maybe_scalar(out, scalar)


def _sigma_prime(spec: DiffusionSpec, x):
    # sigma'(x) = sigma(x) * (a/x - b/(1-x)), valid on the open interval
    return sigma(spec, x) * (spec.a / x - spec.b / (1.0 - x))


def _sigma_second(spec: DiffusionSpec, x):
    # sigma'' = sigma * (g^2 + g') with g = a/x - b/(1-x); negative for a,b in (0,1]
    g = spec.a / x - spec.b / (1.0 - x)
    gp = -spec.a / x**2 - spec.b / (1.0 - x) ** 2
    return sigma(spec, x) * (g * g + gp)


@functools.lru_cache(maxsize=64)
def transform_upper(spec: DiffusionSpec) -> float:
    """F(1), the right endpoint of the transformed state space (pi for a=b=1/2)."""
    if spec.is_square_root:
        return math.pi
    _check_integrable(spec)
    val, err = integrate.quad(
        lambda u: 1.0, 0.0, 1.0, weight="alg", wvar=(-spec.a, -spec.b),
        epsabs=1e-13, limit=200,
    )
    if err > _QUAD_ABS_TOL:
        raise QuadratureError(f"F(1) quadrature error {err:.2e} exceeds {_QUAD_ABS_TOL:.0e}")
    return val


def _check_integrable(spec: DiffusionSpec):
    if spec.a >= 1.0 or spec.b >= 1.0:
        raise ParameterError(
            "1/sigma is not integrable at the boundary for a >= 1 or b >= 1; "
            "the transform requires a, b < 1"
        )


def _head_quadrature(spec: DiffusionSpec, x: float) -> float:
    """int_0^x du/sigma(u) for x <= 1/2, QAWS weight on the left endpoint."""
    if x == 0.0:
        return 0.0
    val, err = integrate.quad(
        lambda u: (1.0 - u) ** (-spec.b), 0.0, x,
        weight="alg", wvar=(-spec.a, 0.0), epsabs=1e-13, limit=200,
    )
    if err > _QUAD_ABS_TOL:
        raise QuadratureError(f"F({x}) quadrature error {err:.2e} exceeds {_QUAD_ABS_TOL:.0e}")
    return val


def _tail_quadrature(spec: DiffusionSpec, z: float) -> float:
    """int_{1-z}^1 du/sigma(u) for z <= 1/2, QAWS weight on the right endpoint."""
    if z == 0.0:
        return 0.0
    val, err = integrate.quad(
        lambda u: u ** (-spec.a), 1.0 - z, 1.0,
        weight="alg", wvar=(0.0, -spec.b), epsabs=1e-13, limit=200,
    )
    if err > _QUAD_ABS_TOL:
        raise QuadratureError(f"F tail({z}) quadrature error {err:.2e} exceeds {_QUAD_ABS_TOL:.0e}")
    return val


def _forward_quadrature(spec: DiffusionSpec, x: float) -> float:
    """F(x) by adaptive quadrature with algebraic endpoint weights.

    The integrand u^-a (1-u)^-b is improper but integrable for a, b < 1;
    QUADPACK's QAWS handles the endpoint singularity exactly, splitting at
    x = 1/2 so the singular factor always sits on an integration endpoint.
    """
    _check_integrable(spec)
    if x <= 0.5:
        return _head_quadrature(spec, x)
    return transform_upper(spec) - _tail_quadrature(spec, 1.0 - x)


def lamperti_forward(spec: DiffusionSpec, x):
    """F(x) = int_0^x du/sigma(u); closed form 2*arcsin(sqrt(x)) for a=b=1/2."""
    arr, scalar = _as_array(x)
    if np.any(arr < 0.0) or np.any(arr > 1.0):
        raise DomainError(f"frequency outside [0,1]: {x}")
    if spec.is_square_root:
        out = 2.0 * np.arcsin(np.sqrt(arr))
    else:
        out = np.array([_forward_quadrature(spec, float(v)) for v in np.atleast_1d(arr)])
        out = out.reshape(arr.shape)
    return _maybe_scalar(out, scalar)


def lamperti_inverse(spec: DiffusionSpec, y):
    """F^-1(y); closed form sin^2(y/2) for a=b=1/2, monotone root-find otherwise."""
    arr, scalar = _as_array(y)
    upper = transform_upper(spec)
    if np.any(arr < -1e-12) or np.any(arr > upper + 1e-12):
        raise DomainError(f"transformed coordinate outside [0, F(1)={upper:.6g}]: {y}")
    arr = np.clip(arr, 0.0, upper)
    if spec.is_square_root:
        out = np.sin(arr / 2.0) ** 2
    else:
        out = np.array([_inverse_root(spec, float(v), upper) for v in np.atleast_1d(arr)])
        out = out.reshape(arr.shape)
    return _maybe_scalar(out, scalar)


@functools.lru_cache(maxsize=64)
def _transform_half(spec: DiffusionSpec) -> float:
    return _head_quadrature(spec, 0.5)


def _inverse_root(spec: DiffusionSpec, y: float, upper: float) -> float:
    # Root-find in x on the left half and in z = 1-x on the right half:
    # near a steep end, only the distance to that end is representable to
    # the relative precision the 1e-10 residual tolerance needs.
    if y <= 0.0:
        return 0.0
    if y >= upper:
        return 1.0
    half = _transform_half(spec)
    if y <= half:
        root = optimize.brentq(
            lambda x: _head_quadrature(spec, x) - y, 0.0, 0.5,
            xtol=1e-30, rtol=8.9e-16, maxiter=200,
        )
        resid = abs(_head_quadrature(spec, root) - y)
    else:
        target = upper - y
        z = optimize.brentq(
            lambda v: _tail_quadrature(spec, v) - target, 0.0, 0.5,
            xtol=1e-30, rtol=8.9e-16, maxiter=200,
        )
        resid = abs(_tail_quadrature(spec, z) - target)
        root = 1.0 - z
    if resid > _QUAD_ABS_TOL:
        raise QuadratureError(f"inverse transform did not converge at y={y}")
    return root


def _potential_arrays(spec: DiffusionSpec, y, cap: float, exact: bool = True):
    """Vectorized potential with overflow clamping.

    Returns (values clamped at cap, boolean mask of capped entries).  The
    regime decides the formula: closed-form 1/2 + 3/4 cot^2 for the neutral
    square-root case, the analytic mu~^2 + mu~' for mutation/selection, and
    the sigma-based big_v for a general neutral (a, b).  `exact=False` lets
    the general case go through a cached inverse-transform interpolant,
    which Monte Carlo needs (millions of evaluations).
    """
    regime = spec.regime()
    y = np.asarray(y, dtype=float)
    if regime == "neutral":
        if spec.is_square_root:
            cot = np.cos(y) / np.sin(y)
            vals = 0.5 + 0.75 * cot * cot
        else:
            vals = _big_v_general(spec, y, exact=exact)
    elif regime == "mutation":
        c1 = 0.25 - spec.beta1
        c2 = 0.25 - spec.beta2
        half = y / 2.0
        s, c = np.sin(half), np.cos(half)
        mu = c1 * s / c - c2 * c / s
        mup = 0.5 * (c1 / (c * c) + c2 / (s * s))
        vals = mu * mu + mup
    else:  # selection
        d = (4.0 * spec.h - 1.0) / 2.0
        half = y / 2.0
        sy = np.sin(y)
        mu = d * np.cos(y) / sy + spec.alpha * np.tan(half)
        mup = -d / (sy * sy) + 0.5 * spec.alpha / np.cos(half) ** 2
        vals = mu * mu + mup
    capped = np.abs(vals) > cap
    if np.any(capped):
        vals = np.where(capped, np.sign(vals) * cap, vals)
    return vals, capped


@functools.lru_cache(maxsize=16)
def _inverse_table(spec: DiffusionSpec):
    """Monotone (y, x) table for fast approximate F^-1, end-clustered nodes."""
    theta = np.linspace(0.0, math.pi, 4097)
    xs = np.sin(theta / 2.0) ** 2
    ys = np.array([_forward_quadrature(spec, float(v)) for v in xs])
    return ys, xs


def _big_v_general(spec: DiffusionSpec, y, exact: bool = True):
    y = np.asarray(y, dtype=float)
    if exact:
        flat = np.array(
            [_inverse_root(spec, float(v), transform_upper(spec)) for v in y.ravel()]
        )
        xs = flat.reshape(y.shape)
    else:
        ys_tab, xs_tab = _inverse_table(spec)
        xs = np.interp(y, ys_tab, xs_tab)
        xs = np.clip(xs, xs_tab[1], xs_tab[-2])  # keep sigma derivatives finite
    return 0.5 * np.abs(_sigma_second(spec, xs)) * sigma(spec, xs) + 0.25 * _sigma_prime(spec, xs) ** 2


def _check_open_interval(spec: DiffusionSpec, y):
    upper = transform_upper(spec)
    arr = np.asarray(y, dtype=float)
    if np.any(arr <= 0.0) or np.any(arr >= upper):
        raise DomainError(
            f"transformed coordinate must lie strictly inside (0, {upper:.6g}): {y}"
        )


def nu(spec: DiffusionSpec, y, cap: float = NU_CAP_DEFAULT):
    """Potential nu = mu^2 + mu' of the unit-volatility process.

    Equals 1/2 + 3/4 cot^2(y) for the neutral square-root case.  Raises
    SingularityError if any value exceeds the overflow cap; the Monte Carlo
    integrator uses the clamping variant instead.
    """
    arr, scalar = _as_array(y)
    _check_open_interval(spec, arr)
    vals, capped = _potential_arrays(spec, arr, cap)
    if np.any(capped):
        raise SingularityError(
            f"nu exceeds the overflow cap {cap:.1e} near the boundary (y={y})"
        )
    return _maybe_scalar(vals, scalar)


def big_v(spec: DiffusionSpec, y, cap: float = NU_CAP_DEFAULT):
    """Nonnegative potential built from sigma alone.

    V(y) = |sigma''(x)| sigma(x)/2 + sigma'(x)^2/4 at x = F^-1(y).  For a
    driftless concave sigma this coincides with nu; in particular both equal
    1/2 + 3/4 cot^2(y) when a = b = 1/2.
    """
    arr, scalar = _as_array(y)
    _check_open_interval(spec, arr)
    vals = _big_v_general(spec, arr)
    capped = vals > cap
    if np.any(capped):
        raise SingularityError(
            f"big_v exceeds the overflow cap {cap:.1e} near the boundary (y={y})"
        )
    return _maybe_scalar(vals, scalar)


def m_diff(spec: DiffusionSpec, y0, y):
    """Antiderivative difference M(y) - M(y0) of the transformed drift.

    Closed forms per drift regime, evaluated in the original coordinate via
    x = F^-1(y).  Implemented as differences of logarithms so that
    m_diff(y0, y) == -m_diff(y, y0) holds exactly in floating point.
    """
    regime = spec.regime()
    y0a, s0 = _as_array(y0)
    ya, s1 = _as_array(y)
    _check_open_interval(spec, y0a)
    _check_open_interval(spec, ya)
    x0 = np.asarray(lamperti_inverse(spec, y0a), dtype=float)
    x1 = np.asarray(lamperti_inverse(spec, ya), dtype=float)
    lx0, lx1 = np.log(x0), np.log(x1)
    l1mx0, l1mx1 = np.log1p(-x0), np.log1p(-x1)
    if regime == "neutral":
        if spec.is_square_root:
            out = 0.25 * ((lx0 + l1mx0) - (lx1 + l1mx1))
        else:
            out = 0.5 * (np.log(sigma(spec, x0)) - np.log(sigma(spec, x1)))
    elif regime == "mutation":
        out = (0.25 - spec.beta1) * (l1mx0 - l1mx1) + (0.25 - spec.beta2) * (lx0 - lx1)
    else:  # selection
        out = (0.25 - spec.h) * ((lx0 + l1mx0) - (lx1 + l1mx1)) + spec.alpha * (l1mx0 - l1mx1)
    return _maybe_scalar(out, s0 and s1)
