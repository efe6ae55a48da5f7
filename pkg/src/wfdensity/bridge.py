"""Brownian-bridge Monte Carlo for the exact transition density.

The density of the unit-volatility process is a Gaussian kernel times
exp(M(y)-M(y0)) times the expectation, over standard Brownian bridges B, of

    exp( -t/2 * int_0^1 potential((1-u) y0 + u y + sqrt(t) B(u)) du ).

The path integral is a trapezoid rule on the bridge grid; paths that wander
outside the open transformed interval are pinned at a small offset from the
boundary, where the potential is huge and the path's contribution correctly
collapses to ~0 (absorption).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .diffusion import (
    BOUNDARY_OFFSET,
    NU_CAP_DEFAULT,
    DiffusionSpec,
    _potential_arrays,
    lamperti_forward,
    sigma,
    m_diff,
    transform_upper,
)
from .errors import DomainError, MonteCarloError

DEFAULT_N_PATHS = 500
DEFAULT_K_STEPS = 100


@dataclass(frozen=True)
class BridgePath:
    """One discretized standard Brownian bridge: B(0) = B(1) = 0."""

    grid: np.ndarray
    values: np.ndarray


@dataclass(frozen=True)
class McEstimate:
    """Monte Carlo mean of the exponential path functional."""

    mean: float
    std_error: float
    n_paths: int
    clamped_fraction: float


@dataclass(frozen=True)
class ExactDensityEstimate:
    value: float
    std_error: float
    mc: McEstimate


def _path_generator(seed: int, path_index: int) -> np.random.Generator:
    # Counter-based streams: path i is reproducible independently of how
    # paths are scheduled across workers.
    return np.random.Generator(np.random.Philox(key=seed).jumped(path_index))


def sample_bridge(k_steps: int, seed: int, path_index: int = 0) -> BridgePath:
    """Sample one bridge on the uniform grid u_j = j/k_steps.

    Built as B(u) = W(u) - u W(1) from Gaussian increments scaled by
    sqrt(du); both endpoints are exactly zero.  Deterministic given
    (seed, path_index).
    """
    if k_steps < 2:
        raise DomainError(f"k_steps must be >= 2, got {k_steps}")
    rng = _path_generator(seed, path_index)
    u = np.linspace(0.0, 1.0, k_steps + 1)
    w = np.empty(k_steps + 1)
    w[0] = 0.0
    np.cumsum(rng.standard_normal(k_steps) * math.sqrt(1.0 / k_steps), out=w[1:])
    values = w - u * w[-1]
    values[0] = 0.0
    values[-1] = 0.0
    return BridgePath(grid=u, values=values)


def bridge_ensemble(n_paths: int, k_steps: int, seed: int) -> np.ndarray:
    """Stack of n_paths independent bridges, shape (n_paths, k_steps + 1)."""
    if n_paths < 1:
        raise DomainError(f"n_paths must be >= 1, got {n_paths}")
    out = np.empty((n_paths, k_steps + 1))
    for i in range(n_paths):
        out[i] = sample_bridge(k_steps, seed, path_index=i).values
    return out


def _functional_samples(spec, y0, y1, t, bridges, cap):
    """exp(-t/2 * path integral) per path, plus the clamped-evaluation count."""
    k = bridges.shape[1] - 1
    u = np.linspace(0.0, 1.0, k + 1)
    pts = y0 + (y1 - y0) * u + math.sqrt(t) * bridges
    upper = transform_upper(spec)
    lo, hi = BOUNDARY_OFFSET, upper - BOUNDARY_OFFSET
    outside = (pts < lo) | (pts > hi)
    np.clip(pts, lo, hi, out=pts)
    vals, capped = _potential_arrays(spec, pts, cap, exact=False)
    integral = np.trapezoid(vals, u, axis=1)
    with np.errstate(under="ignore"):
        samples = np.exp(-0.5 * t * integral)
    return samples, int(np.count_nonzero(outside | capped)), outside.size


def mc_functional(
    spec: DiffusionSpec,
    x0: float,
    x: float,
    t: float,
    n_paths: int = DEFAULT_N_PATHS,
    k_steps: int = DEFAULT_K_STEPS,
    seed: int = 0,
    bridges: np.ndarray | None = None,
    cap: float = NU_CAP_DEFAULT,
) -> McEstimate:
    """Monte Carlo estimate of the exponential bridge functional.

    `bridges` may be passed explicitly to reuse one ensemble across many
    evaluation points (common random numbers); it overrides n_paths/k_steps.
    """
    _check_interior(x0, x, t)
    if bridges is None:
        bridges = bridge_ensemble(n_paths, k_steps, seed)
    y0 = lamperti_forward(spec, x0)
    y1 = lamperti_forward(spec, x)
    samples, n_clamped, n_evals = _functional_samples(spec, y0, y1, t, bridges, cap)
    if n_clamped == n_evals:
        raise MonteCarloError(
            f"every path evaluation clamped at the boundary (x0={x0}, x={x}, t={t})"
        )
    n = bridges.shape[0]
    mean = float(samples.mean())
    std_error = float(samples.std(ddof=1) / math.sqrt(n)) if n > 1 else float("inf")
    return McEstimate(
        mean=mean,
        std_error=std_error,
        n_paths=n,
        clamped_fraction=n_clamped / n_evals,
    )


def _check_interior(x0, x, t):
    if not (0.0 < x0 < 1.0) or not (0.0 < x < 1.0):
        raise DomainError(f"x0 and x must lie strictly inside (0,1): x0={x0}, x={x}")
    if t <= 0.0:
        raise DomainError(f"t must be positive, got {t}")


def _gauss_kernel(dy: float, t: float) -> float:
    return math.exp(-dy * dy / (2.0 * t)) / math.sqrt(2.0 * math.pi * t)


def exact_density(
    spec: DiffusionSpec,
    x0: float,
    x: float,
    t: float,
    n_paths: int = DEFAULT_N_PATHS,
    k_steps: int = DEFAULT_K_STEPS,
    seed: int = 0,
    bridges: np.ndarray | None = None,
    cap: float = NU_CAP_DEFAULT,
) -> ExactDensityEstimate:
    """Pointwise exact transition density with its Monte Carlo standard error.

    p_t(x0, x) = exp(M(y)-M(y0)) / sigma(x) * E[functional] * q_t(y, y0)
    with y = F(x); for the neutral square-root case the prefactor reduces to
    (x0(1-x0))^(1/4) / (x(1-x))^(3/4).
    """
    mc = mc_functional(spec, x0, x, t, n_paths, k_steps, seed, bridges, cap)
    y0 = lamperti_forward(spec, x0)
    y1 = lamperti_forward(spec, x)
    pref = math.exp(m_diff(spec, y0, y1)) / sigma(spec, x)
    q = _gauss_kernel(y1 - y0, t)
    return ExactDensityEstimate(
        value=pref * mc.mean * q, std_error=pref * mc.std_error * q, mc=mc
    )


def exact_density_grid(
    spec: DiffusionSpec,
    x0: float,
    xs: np.ndarray,
    t: float,
    n_paths: int = DEFAULT_N_PATHS,
    k_steps: int = DEFAULT_K_STEPS,
    seed: int = 0,
    cap: float = NU_CAP_DEFAULT,
):
    """Exact density on a grid of x values sharing one bridge ensemble.

    Reusing the ensemble (common random numbers) makes the curve smooth in x
    and costs one ensemble instead of len(xs).  Returns (values, std_errors,
    clamped_fraction).
    """
    xs = np.asarray(xs, dtype=float)
    bridges = bridge_ensemble(n_paths, k_steps, seed)
    values = np.empty_like(xs)
    errors = np.empty_like(xs)
    clamped = 0
    total = 0
    y0 = lamperti_forward(spec, x0)
    ys = lamperti_forward(spec, xs)
    prefs = np.exp(m_diff(spec, y0, ys)) / sigma(spec, xs)
    for i, (xi, yi) in enumerate(zip(xs, ys)):
        _check_interior(x0, xi, t)
        samples, n_clamped, n_evals = _functional_samples(spec, y0, yi, t, bridges, cap)
        clamped += n_clamped
        total += n_evals
        q = _gauss_kernel(yi - y0, t)
        values[i] = prefs[i] * samples.mean() * q
        errors[i] = prefs[i] * samples.std(ddof=1) / math.sqrt(n_paths) * q
    if clamped == total:
        raise MonteCarloError("every path evaluation clamped at the boundary")
    return values, errors, clamped / total
