import json
import math

import numpy as np
import pytest
from scipy.integrate import quad, simpson

from wfdensity import (
    DensityModel,
    DiffusionSpec,
    DomainError,
    ParameterError,
    ae_corrected_density,
    ae_density,
    beta_moment_density,
    beta_moment_params,
    density_grid,
    evaluate_model,
    gauss_approx_density,
    gauss_approx_outside_validity,
    gaussian_moment_density,
    moment_variance,
    mutation_ae_density,
    normalize,
    selection_ae_density,
)

WF = DiffusionSpec.neutral()


class TestAeDensity:
    def test_value_at_center(self):
        # (2 pi t)^(-1/2) (1/4)^(1/4) / (1/4)^(3/4) = 2 / sqrt(0.2 pi) at t = 0.1
        assert ae_density(0.5, 0.5, 0.1) == pytest.approx(2.0 / math.sqrt(0.2 * math.pi), rel=1e-12)

    def test_exponent_vanishes_at_start(self):
        for t in (0.01, 0.1, 0.5):
            x0 = 0.3
            expected = (x0 * (1 - x0)) ** (-0.5) / math.sqrt(2 * math.pi * t)
            assert ae_density(x0, x0, t) == pytest.approx(expected, rel=1e-12)

    def test_reflection_symmetry(self):
        xs = np.linspace(0.05, 0.95, 19)
        a = ae_density(0.3, xs, 0.2)
        b = ae_density(0.7, 1.0 - xs, 0.2)
        assert np.allclose(a, b, rtol=1e-12)

    def test_domain(self):
        with pytest.raises(DomainError):
            ae_density(0.5, 0.0, 0.1)
        with pytest.raises(DomainError):
            ae_density(0.5, 0.5, 0.0)


class TestAeCorrected:
    def test_factor_at_center(self):
        # chord average degenerates to nu(pi/2) = 1/2, factor = 1 - t/4
        for t in (0.05, 0.2):
            ratio = ae_corrected_density(0.5, 0.5, t) / ae_density(0.5, 0.5, t)
            assert ratio == pytest.approx(1.0 - t / 4.0, rel=1e-12)

    def test_ratio_to_one_as_t_to_zero(self):
        # compare correction factors directly: the densities themselves
        # underflow to 0/0 far from x0 at these t
        from wfdensity import chord_mean_nu

        xs = np.linspace(0.2, 0.8, 61)
        for t in (1e-3, 1e-4):
            factor = 1.0 - 0.5 * t * chord_mean_nu(0.5, xs)
            assert np.max(np.abs(factor - 1.0)) < 2 * t

    def test_factor_never_above_one(self):
        xs = np.linspace(0.05, 0.95, 37)
        for t in (0.01, 0.1, 0.45):
            assert np.all(ae_corrected_density(0.1, xs, t) <= ae_density(0.1, xs, t) + 1e-15)

    def test_clamped_at_zero_for_large_t(self):
        # near the boundary the chord average is huge and the bracket would go negative
        assert ae_corrected_density(0.5, 0.001, 3.0) == 0.0


class TestGaussApprox:
    def test_peak_value(self):
        assert gauss_approx_density(0.5, 0.5, 0.1) == pytest.approx(
            1.0 / math.sqrt(2 * math.pi * 0.025), rel=1e-12
        )

    def test_validity_mask(self):
        xs = np.array([0.5, 0.52, 0.8])
        mask = gauss_approx_outside_validity(0.5, xs, t=0.01, c=5.0)
        assert mask.tolist() == [False, False, True]


class TestGaussianMoment:
    def test_argmax_at_x0(self):
        xs = np.linspace(0.01, 0.99, 981)
        for t in (0.05, 0.3):
            vals = gaussian_moment_density(0.3, xs, t)
            assert xs[np.argmax(vals)] == pytest.approx(0.3, abs=2e-3)

    def test_variance_value(self):
        assert moment_variance(0.5, 0.5) == pytest.approx(-math.expm1(-0.5) * 0.25, rel=1e-14)
        assert moment_variance(0.5, 0.5) == pytest.approx(0.0983673, abs=1e-6)

    def test_paper_literal_switch(self):
        assert moment_variance(0.5, 0.5, "paper-literal") == pytest.approx(
            math.exp(-0.5) * 0.25, rel=1e-14
        )

    def test_small_t_matches_gauss_approx(self):
        # variance ratio (1-e^-t)/t -> 1; sup diff < 1% of peak up to t ~ 0.04,
        # ~2.5% at t = 0.1 (the 1% claim does not extend to 0.1)
        for t, bound in ((0.01, 0.01), (0.035, 0.01), (0.1, 0.03)):
            xs = np.linspace(0.5 - t, 0.5 + t, 201)
            diff = np.max(np.abs(gauss_approx_density(0.5, xs, t) - gaussian_moment_density(0.5, xs, t)))
            peak = gauss_approx_density(0.5, 0.5, t)
            assert diff / peak < bound


class TestBetaMoment:
    def test_symmetric_at_half(self):
        a_t, b_t = beta_moment_params(0.5, 0.2)
        assert a_t == pytest.approx(b_t, rel=1e-14)

    def test_moment_round_trip(self):
        # The two-step recipe sets alpha+beta = k := E(1-E)/Var, so the Beta
        # mean is exactly E and the Beta variance is exactly E(1-E)/(k+1)
        # (i.e. Var * k/(k+1); the recipe matches Var itself only to O(1/k)).
        for x0, t in ((0.3, 0.1), (0.7, 0.45), (0.5, 0.02)):
            a_t, b_t = beta_moment_params(x0, t)
            s = a_t + b_t
            assert a_t / s == pytest.approx(x0, abs=1e-10)
            var = a_t * b_t / (s * s * (s + 1.0))
            k = x0 * (1 - x0) / moment_variance(x0, t)
            assert var == pytest.approx(x0 * (1 - x0) / (k + 1.0), abs=1e-10)

    def test_large_t_u_shape(self):
        # Var -> x0(1-x0) gives alpha_t -> x0 < 1, beta_t -> 1-x0 < 1
        a_t, b_t = beta_moment_params(0.3, 20.0)
        assert a_t == pytest.approx(0.3, abs=1e-8)
        assert b_t == pytest.approx(0.7, abs=1e-8)
        vals = beta_moment_density(0.3, np.array([0.01, 0.5, 0.99]), 20.0)
        assert vals[0] > vals[1] and vals[2] > vals[1]

    def test_invalid_variance_rejected(self):
        with pytest.raises(ParameterError):
            beta_moment_params(0.5, math.inf)

    def test_pdf_matches_scipy(self):
        from scipy.stats import beta as beta_dist

        xs = np.linspace(0.01, 0.99, 23)
        a_t, b_t = beta_moment_params(0.4, 0.3)
        assert np.allclose(beta_moment_density(0.4, xs, 0.3), beta_dist.pdf(xs, a_t, b_t), rtol=1e-10)


class TestDriftedExpansions:
    def test_mutation_reduces_bitwise(self):
        xs = np.linspace(0.05, 0.95, 37)
        a = mutation_ae_density(0.3, xs, 0.1, 0.0, 0.0)
        b = ae_density(0.3, xs, 0.1)
        assert np.array_equal(a, b)

    def test_selection_reduces_bitwise(self):
        xs = np.linspace(0.05, 0.95, 37)
        a = selection_ae_density(0.3, xs, 0.1, 0.0, 0.0)
        b = ae_density(0.3, xs, 0.1)
        assert np.array_equal(a, b)

    def test_mutation_ratio_identity(self):
        # mutation expansion = plain expansion * (1-x0)^-b1 x0^-b2 (1-x)^b1 x^b2
        x0, x, t, b1, b2 = 0.3, 0.6, 0.1, 0.1, 0.05
        lhs = mutation_ae_density(x0, x, t, b1, b2)
        rhs = ae_density(x0, x, t) * (1 - x0) ** -b1 * x0**-b2 * (1 - x) ** b1 * x**b2
        assert lhs == pytest.approx(rhs, rel=1e-12)

    def test_mutation_weakens_left_singularity(self):
        # with beta2 = 1/4 the x-exponent drops from 3/4 to 1/2; the ratio to
        # the neutral form is x0^-b2 x^b2
        small = 1e-5
        ratio = mutation_ae_density(0.5, small, 0.1, 0.0, 0.25) / ae_density(0.5, small, 0.1)
        assert ratio == pytest.approx(0.5**-0.25 * small**0.25, rel=1e-6)

    def test_selection_prefactor_consistency(self):
        # prefactor ratio to neutral equals exp(M-difference) of the selection drift
        from wfdensity import lamperti_forward, m_diff

        x0, x, t, alpha, h = 0.3, 0.6, 0.1, 0.8, 0.2
        spec = DiffusionSpec(alpha=alpha, h=h)
        lhs = selection_ae_density(x0, x, t, alpha, h) / ae_density(x0, x, t)
        y0, y1 = lamperti_forward(WF, x0), lamperti_forward(WF, x)
        rhs = math.exp(m_diff(spec, y0, y1)) / math.exp(m_diff(WF, y0, y1))
        assert lhs == pytest.approx(rhs, rel=1e-12)

    def test_argmax_reflection_stability(self):
        grid = density_grid(1e-4, 4001)
        direct = mutation_ae_density(0.3, grid, 0.2, 0.1, 0.05)
        mirrored = mutation_ae_density(0.7, grid, 0.2, 0.05, 0.1)
        assert grid[np.argmax(direct)] == pytest.approx(1.0 - grid[np.argmax(mirrored)], abs=1e-3)


class TestNormalize:
    def test_integral_one_for_each_kind(self):
        grid = density_grid()
        for kind in ("AE", "AECorrected", "GaussA", "GaussianMoment", "BetaMoment"):
            gd = evaluate_model(DensityModel(kind), WF, 0.3, 0.2, grid)
            assert simpson(gd.values, x=gd.grid) == pytest.approx(1.0, abs=1e-6)
            assert np.all(gd.values >= 0.0)

    def test_tight_gaussian_constant_near_one(self):
        grid = density_grid()
        raw = gauss_approx_density(0.5, grid, 0.01)
        gd = normalize(grid, raw, DensityModel("GaussA"), 0.5, 0.01)
        assert gd.norm_constant == pytest.approx(1.0, abs=1e-6)

    def test_expansion_is_improper(self):
        grid = density_grid()
        c_mid = normalize(grid, ae_density(0.5, grid, 0.1), DensityModel("AE"), 0.5, 0.1).norm_constant
        assert c_mid > 1.02  # no constraint that the raw form integrates to 1
        c_edge = normalize(grid, ae_density(0.1, grid, 0.45), DensityModel("AE"), 0.1, 0.45).norm_constant
        assert abs(c_edge - 1.0) > 0.01

    def test_constant_stable_under_grid_doubling(self):
        c1 = normalize(density_grid(1e-4, 2001), ae_density(0.5, density_grid(1e-4, 2001), 0.1),
                       DensityModel("AE"), 0.5, 0.1).norm_constant
        c2 = normalize(density_grid(1e-4, 4001), ae_density(0.5, density_grid(1e-4, 4001), 0.1),
                       DensityModel("AE"), 0.5, 0.1).norm_constant
        assert abs(c2 - c1) / c1 < 1e-4

    def test_rejects_bad_values(self):
        grid = density_grid(1e-4, 101)
        with pytest.raises(ParameterError):
            normalize(grid, np.full(grid.shape, -1.0), DensityModel("AE"), 0.5, 0.1)
        with pytest.raises(ParameterError):
            normalize(grid, np.zeros_like(grid), DensityModel("AE"), 0.5, 0.1)


class TestSerialization:
    def test_csv_round_trip(self, tmp_path):
        from wfdensity import write_grid_density
        from wfdensity.models import read_grid_density_csv

        grid = density_grid(1e-4, 201)
        gd = evaluate_model(DensityModel("AE"), WF, 0.4, 0.2, grid)
        path = write_grid_density(gd, tmp_path / "d.csv", seed=5)
        back_grid, back_vals = read_grid_density_csv(path)
        assert np.allclose(back_grid, gd.grid, atol=1e-12)
        assert np.allclose(back_vals, gd.values, rtol=1e-10)
        sidecar = json.loads(path.with_suffix(".json").read_text())
        assert sidecar["seed"] == 5
        assert sidecar["norm_constant"] == pytest.approx(gd.norm_constant)


class TestDensityModelType:
    def test_unknown_kind_rejected(self):
        with pytest.raises(ParameterError):
            DensityModel("NotAModel")

    def test_exactmc_evaluates_with_errors(self):
        grid = np.linspace(0.05, 0.95, 31)
        gd = evaluate_model(DensityModel("ExactMC"), WF, 0.5, 0.1, grid, n_paths=100, seed=1)
        assert gd.std_error is not None
        assert simpson(gd.values, x=gd.grid) == pytest.approx(1.0, abs=1e-9)

    def test_beta_kernel_pdf_shape_against_quad(self):
        # each raw candidate integrates over (0,1) to its norm constant
        grid = density_grid()
        raw = beta_moment_density(0.4, grid, 0.3)
        c = simpson(raw, x=grid)
        exact, _ = quad(lambda x: beta_moment_density(0.4, x, 0.3), 1e-4, 1 - 1e-4)
        assert c == pytest.approx(exact, rel=1e-6)
