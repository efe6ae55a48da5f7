"""Continuous Hellinger and L2 distances between grid densities.

Both distances are Simpson quadratures on a common uniform grid clipped to
[eps, 1-eps]; the clipping keeps the quadrature of sqrt(density) stable when
one argument carries an integrable boundary singularity, and the default eps
stays above the resolution at which a kernel density estimate can carry
structure, so models are not scored on a sliver no estimate can represent.
Densities on different grids are resampled by monotone linear interpolation,
which cannot overshoot and preserves nonnegativity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .errors import GridError

DEFAULT_CLIP_EPS = 1e-3


@dataclass(frozen=True)
class DistanceRecord:
    x0: float
    t: float
    model: str
    hellinger: float
    l2: float
    grid_spec: str


def _grid_and_values(obj):
    # GridDensity and BetaKernelEstimate both expose .grid / .values
    return np.asarray(obj.grid, dtype=float), np.asarray(obj.values, dtype=float)


def common_grid(p, q, eps: float = DEFAULT_CLIP_EPS):
    """Resample both densities onto one uniform grid inside [eps, 1-eps].

    The grid spans the overlap of the two supports and refines to the finer
    of the two resolutions (odd point count, so Simpson sees whole pairs).
    """
    gp, vp = _grid_and_values(p)
    gq, vq = _grid_and_values(q)
    lo = max(gp[0], gq[0], eps)
    hi = min(gp[-1], gq[-1], 1.0 - eps)
    if not lo < hi:
        raise GridError(
            f"density supports do not overlap inside [{eps}, {1 - eps}]: "
            f"[{gp[0]}, {gp[-1]}] vs [{gq[0]}, {gq[-1]}]"
        )
    n = max(gp.size, gq.size)
    if n % 2 == 0:
        n += 1
    grid = np.linspace(lo, hi, n)
    return grid, np.interp(grid, gp, vp), np.interp(grid, gq, vq)


def hellinger(p, q, eps: float = DEFAULT_CLIP_EPS) -> float:
    """H(p, q) = sqrt( 1/2 int (sqrt p - sqrt q)^2 ), clamped into [0, 1]."""
    grid, vp, vq = common_grid(p, q, eps)
    h2 = 0.5 * float(integrate.simpson((np.sqrt(vp) - np.sqrt(vq)) ** 2, x=grid))
    return min(1.0, math.sqrt(max(0.0, h2)))


def l2_distance(p, q, eps: float = DEFAULT_CLIP_EPS) -> float:
    """sqrt( int (p - q)^2 ) on the common grid."""
    grid, vp, vq = common_grid(p, q, eps)
    return math.sqrt(max(0.0, float(integrate.simpson((vp - vq) ** 2, x=grid))))


def grid_spec_label(p, q, eps: float = DEFAULT_CLIP_EPS) -> str:
    grid, _, _ = common_grid(p, q, eps)
    return f"uniform[{grid[0]:.6g},{grid[-1]:.6g}]x{grid.size}"
