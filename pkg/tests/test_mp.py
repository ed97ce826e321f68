import numpy as np
import pytest

from specrecon.lab import ExperimentShape, GroundTruthModel, gen_data_matrix, sample_covariance, sym_eigen
from specrecon.mp import (
    LimitSpectrum,
    MPLaw,
    limit_density_curve,
    mp_cdf,
    mp_density,
    stieltjes_fixed_point,
)
from specrecon.spectrum import ks_distance, stieltjes_sum


class TestMPLaw:
    def test_edges(self):
        law = MPLaw(lam=0.5)
        assert law.a == pytest.approx((1 - np.sqrt(0.5)) ** 2)
        assert law.b == pytest.approx((1 + np.sqrt(0.5)) ** 2)

    def test_point_mass(self):
        assert MPLaw(lam=0.5).point_mass_at_zero == 0.0
        assert MPLaw(lam=2.0).point_mass_at_zero == pytest.approx(0.5)

    def test_from_c(self):
        assert MPLaw.from_c(2.0).lam == pytest.approx(0.5)

    def test_bad_ratio(self):
        with pytest.raises(ValueError):
            MPLaw(lam=0.0)


class TestMPDensity:
    def test_outside_support_zero(self):
        law = MPLaw(lam=0.5)
        assert mp_density(law.a - 0.01, law) == 0.0
        assert mp_density(law.b + 0.01, law) == 0.0

    def test_hand_value_lam1(self):
        # lam=1, x=2: sqrt((4-2)(2-0)) / (2 pi * 2) = 1/(2 pi)
        assert mp_density(2.0, MPLaw(lam=1.0)) == pytest.approx(1.0 / (2 * np.pi))

    @pytest.mark.parametrize("lam", [0.1, 0.5, 1.0, 2.0])
    def test_normalization(self, lam):
        from scipy import integrate

        law = MPLaw(lam=lam)
        val, _ = integrate.quad(mp_density, law.a, law.b, args=(law,), limit=400)
        assert val == pytest.approx(1.0 - law.point_mass_at_zero, abs=1e-6)


class TestMPCdf:
    def test_boundaries(self):
        law = MPLaw(lam=0.5)
        assert mp_cdf(-1.0, law) == 0.0
        assert mp_cdf(law.a, law) == pytest.approx(0.0, abs=1e-12)
        assert mp_cdf(law.b + 1, law) == pytest.approx(1.0, abs=1e-6)

    def test_monotone(self):
        law = MPLaw(lam=0.5)
        xs = np.linspace(0, law.b + 0.5, 25)
        vals = [mp_cdf(x, law) for x in xs]
        assert np.all(np.diff(vals) >= -1e-12)

    def test_point_mass_included(self):
        law = MPLaw(lam=2.0)  # c = 0.5, half the mass sits at zero
        assert mp_cdf(law.a / 2, law) == pytest.approx(0.5)

    def test_ks_against_simulation(self):
        shape = ExperimentShape(p=400, n=800, master_seed=0)
        spec = sym_eigen(sample_covariance(gen_data_matrix(shape, GroundTruthModel.identity())))
        law = MPLaw.from_c(2.0)
        assert ks_distance(spec, lambda x: mp_cdf(x, law)) < 0.05


class TestLimitSpectrum:
    def test_weights_must_sum_to_one(self):
        with pytest.raises(ValueError):
            LimitSpectrum(np.array([1.0, 2.0]), np.array([0.5, 0.4]), c=2.0)

    def test_point_mass_helper(self):
        s = LimitSpectrum.point_mass(1.0, 2.0)
        assert s.atoms.tolist() == [1.0] and s.weights.tolist() == [1.0]

    def test_from_values_uniform(self):
        s = LimitSpectrum.from_spectrum_values([1.0, 2.0, 3.0, 4.0], c=2.0)
        assert np.allclose(s.weights, 0.25)


class TestFixedPoint:
    def test_matches_closed_form(self):
        law = MPLaw.from_c(2.0)
        spec = LimitSpectrum.point_mass(1.0, 2.0)
        span = law.b - law.a
        grid = np.linspace(law.a + 0.05 * span, law.b - 0.05 * span, 30)
        for x in grid:
            r = stieltjes_fixed_point(x, 1e-4, spec)
            assert abs(r.density - mp_density(x, law)) < 1e-3
            assert r.residual < 1e-10

    def test_tail_decay(self):
        law = MPLaw.from_c(2.0)
        spec = LimitSpectrum.point_mass(1.0, 2.0)
        z = 10 * law.b
        r = stieltjes_fixed_point(z, 1e-4, spec)
        assert r.density < 1e-6
        assert abs(r.m + 1.0 / z) < 0.05 / z

    def test_two_atom_density_integrates(self):
        spec = LimitSpectrum(np.array([1.0, 4.0]), np.array([0.5, 0.5]), c=4.0)
        grid = np.linspace(0.05, 8.0, 400)
        dens = limit_density_curve(spec, grid, eta=1e-3)
        assert np.all(dens >= 0)
        total = np.trapezoid(dens, grid)
        assert total == pytest.approx(1.0, abs=0.02)

    def test_eta_must_be_positive(self):
        with pytest.raises(ValueError):
            stieltjes_fixed_point(1.0, 0.0, LimitSpectrum.point_mass(1.0, 2.0))

    def test_discrete_sum_approaches_integral(self):
        # -1 - x * (discrete Stieltjes sum at a spectrum point) should drift
        # toward the continuum value as p grows at fixed c
        model = GroundTruthModel.identity()
        c = 2.0
        devs = []
        for p in (100, 400):
            shape = ExperimentShape.from_ratio(p, c, master_seed=0)
            spec = sym_eigen(sample_covariance(gen_data_matrix(shape, model)))
            i = p // 2
            # direct leave-one-out discrete form
            v = spec.values
            keep = np.arange(p) != i
            disc = float(np.sum(v[keep] / (v[keep] - v[i]))) / p
            r = stieltjes_fixed_point(spec[i], 1e-3, LimitSpectrum.point_mass(1.0, c))
            # continuum analog: integral of t/(t - x) = 1 + x * Re m(x)
            cont = 1.0 + spec[i] * r.m.real
            devs.append(abs(disc - cont))
        assert devs[1] < devs[0]
