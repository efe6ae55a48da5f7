import math
from dataclasses import dataclass

import numpy as np
import pytest
from scipy.stats import beta as beta_dist

from wfdensity import GridError, hellinger, l2_distance


@dataclass
class GD:
    grid: np.ndarray
    values: np.ndarray


def _gaussian(grid, mu, sd):
    return GD(grid, np.exp(-((grid - mu) ** 2) / (2 * sd**2)) / (sd * math.sqrt(2 * math.pi)))


def _beta(grid, a, b):
    return GD(grid, beta_dist.pdf(grid, a, b))


GRID = np.linspace(1e-4, 1 - 1e-4, 2001)


class TestHellinger:
    def test_identity(self):
        p = _beta(GRID, 2, 5)
        assert hellinger(p, p) == 0.0

    def test_near_disjoint(self):
        sd = math.sqrt(1e-6)
        p = _gaussian(GRID, 0.2, sd)
        q = _gaussian(GRID, 0.8, sd)
        assert hellinger(p, q) > 0.999

    def test_gaussian_closed_form(self):
        # equal variances: H^2 = 1 - exp(-(mu1-mu2)^2 / (8 sigma^2));
        # at gap = sigma this is 1 - e^(-1/8); sigma small enough that the
        # truncation to [0,1] loses < 1e-10 of mass
        sd = 0.05
        p = _gaussian(GRID, 0.45, sd)
        q = _gaussian(GRID, 0.50, sd)
        expected = math.sqrt(1.0 - math.exp(-1.0 / 8.0))
        assert hellinger(p, q) == pytest.approx(expected, abs=1e-3)

    def test_symmetry_and_range(self):
        p = _beta(GRID, 2, 3)
        q = _beta(GRID, 5, 1.5)
        h1, h2 = hellinger(p, q), hellinger(q, p)
        assert h1 == h2
        assert 0.0 < h1 < 1.0

    def test_reflection_invariance(self):
        p = _beta(GRID, 2, 6)
        q = _beta(GRID, 3, 3)
        pr = GD(GRID, p.values[::-1].copy())
        qr = GD(GRID, q.values[::-1].copy())
        assert hellinger(p, q) == pytest.approx(hellinger(pr, qr), abs=1e-12)

    def test_grid_refinement_stability(self):
        fine = np.linspace(1e-4, 1 - 1e-4, 4001)
        p1, q1 = _beta(GRID, 2, 4), _beta(GRID, 4, 2)
        p2, q2 = _beta(fine, 2, 4), _beta(fine, 4, 2)
        assert abs(hellinger(p1, q1) - hellinger(p2, q2)) < 1e-3

    def test_no_overlap_error(self):
        p = GD(np.linspace(0.1, 0.2, 11), np.ones(11))
        q = GD(np.linspace(0.7, 0.8, 11), np.ones(11))
        with pytest.raises(GridError):
            hellinger(p, q)


class TestL2:
    def test_identity_and_symmetry(self):
        p = _beta(GRID, 2, 2)
        q = _beta(GRID, 3, 4)
        assert l2_distance(p, p) == 0.0
        assert l2_distance(p, q) == l2_distance(q, p)

    def test_uniform_vs_triangle_value(self):
        # with p = 1 and q = 2x, int_(eps)^(1-eps) (1-2x)^2 dx = (1-2 eps)^3/3;
        # the default clip is eps = 1e-3
        p = GD(GRID, np.ones_like(GRID))
        q = GD(GRID, 2.0 * GRID)
        assert l2_distance(p, q) == pytest.approx(math.sqrt(0.998**3 / 3.0), abs=1e-4)


class TestMetricProperties:
    def test_triangle_inequality_random_betas(self):
        rng = np.random.default_rng(42)
        for _ in range(200):
            a1, b1, a2, b2, a3, b3 = rng.uniform(0.8, 6.0, size=6)
            p = _beta(GRID, a1, b1)
            q = _beta(GRID, a2, b2)
            r = _beta(GRID, a3, b3)
            for dist in (hellinger, l2_distance):
                dpq, dqr, dpr = dist(p, q), dist(q, r), dist(p, r)
                assert dpr <= dpq + dqr + 1e-12

    def test_identity_of_indiscernibles(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            a, b = rng.uniform(0.8, 6.0, size=2)
            p = _beta(GRID, a, b)
            q = _beta(GRID, a + 0.3, b)
            assert hellinger(p, q) > 0.0
            assert l2_distance(p, q) > 0.0

    def test_resampling_between_grids(self):
        coarse = np.linspace(1e-4, 1 - 1e-4, 501)
        p = _beta(GRID, 2, 4)
        q = _beta(coarse, 2, 4)
        assert hellinger(p, q) < 5e-3
