from math import pi, sqrt

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pdfrac.errors import ConfigurationError, DomainError
from pdfrac.material import (CallableInfluence, ExponentialPotential, LinearInfluence,
                             MaterialModel, PairPotential, bond_potential, bulk_modulus,
                             calibrate, critical_strain, energy_release_rate,
                             force_derivative, moduli_from_profile,
                             pairwise_force_density, solve_critical_argument)


def model(c=2.0, beta=3.0, eps=1.0, dim=2, rho=1.0):
    return MaterialModel(ExponentialPotential(c, beta), LinearInfluence(), eps, rho, dim)


class TestBondPotential:
    def test_zero_strain(self):
        m = model()
        assert np.all(bond_potential(0.0, np.array([0.1, 0.5, 1.0]), m) == 0.0)

    @pytest.mark.parametrize("xi", [0.1, 0.4, 0.9])
    def test_saturates_at_plateau(self, xi):
        m = model(c=2.0, beta=3.0)
        expected = (1.0 - xi) / xi * 2.0
        assert bond_potential(1e4, xi, m) == pytest.approx(expected, rel=1e-14)

    @pytest.mark.parametrize("S", [0.001, 0.01, 0.1])
    def test_even_in_strain(self, S):
        m = model()
        assert bond_potential(S, 0.3, m) == bond_potential(-S, 0.3, m)

    @pytest.mark.parametrize("xi", [0.0, -0.1, 1.5])
    def test_length_outside_horizon(self, xi):
        with pytest.raises(DomainError):
            bond_potential(0.1, xi, model())


class TestForce:
    def test_odd_and_zero(self):
        m = model()
        assert pairwise_force_density(0.0, 0.5, m) == 0.0
        assert pairwise_force_density(-0.2, 0.5, m) == -pairwise_force_density(0.2, 0.5, m)

    def test_matches_finite_difference(self, glass, rng):
        eps = glass.horizon
        xi = rng.uniform(0.05, 1.0, 20) * eps
        S = rng.uniform(-3.0, 3.0, 20) * critical_strain(xi, glass)
        step = 1e-6 * np.abs(S)
        fd = (bond_potential(S + step, xi, glass) - bond_potential(S - step, xi, glass)) / (2 * step)
        f = pairwise_force_density(S, xi, glass)
        assert np.max(np.abs(fd - f) / np.abs(f)) < 1e-6

    @pytest.mark.parametrize("xi", [0.2, 0.5, 0.8])
    def test_peak_at_critical_strain(self, xi):
        beta = 3.0
        m = model(beta=beta)
        S = np.linspace(1e-4, 5.0, 400001)
        f = pairwise_force_density(S, xi, m)
        assert S[np.argmax(f)] == pytest.approx(1.0 / sqrt(2.0 * beta * xi), abs=2e-5)

    def test_tangent_changes_sign_at_critical_strain(self, glass):
        xi = 0.5 * glass.horizon
        Sc = critical_strain(xi, glass)
        assert force_derivative(0.999 * Sc, xi, glass) > 0.0
        assert force_derivative(1.001 * Sc, xi, glass) < 0.0


class TestCriticalStrain:
    def test_closed_form_example(self):
        m = model(beta=2.0)
        assert m.critical_argument == 0.25
        assert critical_strain(1.0, m) == 0.5

    def test_length_scaling(self, glass):
        assert critical_strain(4e-4, glass) == pytest.approx(critical_strain(1e-4, glass) / 2)

    @pytest.mark.parametrize("beta", [1e6, 1.273e8, 1e9])
    def test_bisection_matches_closed_form(self, beta):
        pot = ExponentialPotential(1.0, beta)
        assert solve_critical_argument(pot) == pytest.approx(1.0 / (2.0 * beta), rel=1e-12)

    def test_unbracketed_root(self):
        class Convex(PairPotential):
            plateau = 1.0
            scale = 1.0

            def __call__(self, p):
                return p

            def d1(self, p):
                return np.ones_like(np.asarray(p, dtype=float))

            def d2(self, p):
                return np.zeros_like(np.asarray(p, dtype=float))

        with pytest.raises(ConfigurationError):
            solve_critical_argument(Convex())


class TestModuli:
    def test_moments(self):
        assert LinearInfluence().moment(2) == pytest.approx(1.0 / 12.0, rel=1e-10)
        assert LinearInfluence().moment(3) == pytest.approx(1.0 / 20.0, rel=1e-10)

    def test_moment_of_custom_profile(self):
        J = CallableInfluence(lambda q: 1.0 - q * q)
        assert J.moment(2) == pytest.approx(1.0 / 3.0 - 1.0 / 5.0, rel=1e-10)

    @pytest.mark.parametrize("which", ["c", "beta"])
    def test_linear_in_slope(self, which):
        base = model(c=2.0, beta=3.0)
        kw = {"c": 2.0, "beta": 3.0}
        kw[which] *= 2.0
        assert model(**kw).mu == pytest.approx(2.0 * base.mu, rel=1e-14)

    def test_lame_constants_equal(self, glass):
        mu, lam = moduli_from_profile(glass)
        assert mu == lam


class TestReleaseRate:
    def test_two_dimensions(self):
        m = model(c=7.0)
        assert energy_release_rate(m) == pytest.approx(7.0 / (3.0 * pi), rel=1e-12)

    def test_three_dimensions(self):
        m = model(c=7.0, dim=3)
        assert energy_release_rate(m) == pytest.approx(3.0 * 7.0 / 40.0, rel=1e-12)

    def test_independent_of_beta_and_horizon(self):
        g0 = model(beta=3.0, eps=1.0).G
        assert model(beta=30.0, eps=10.0).G == g0
        assert model(beta=0.3, eps=0.1).G == g0


class TestCalibration:
    def test_round_trip(self, glass):
        assert bulk_modulus(glass) == pytest.approx(25e9, rel=1e-10)
        assert energy_release_rate(glass) == pytest.approx(500.0, rel=1e-10)

    def test_plate_parameters(self, glass):
        assert glass.potential.c == pytest.approx(3 * pi * 500.0, rel=1e-12)
        assert glass.potential.c == pytest.approx(4712.4, abs=0.05)
        assert glass.potential.beta == pytest.approx(1.273e8, rel=1e-3)
        assert glass.mu == pytest.approx(12.5e9, rel=1e-12)

    def test_scaling_release_rate(self, glass):
        m4 = calibrate(25e9, 2000.0, dim=2, density=1200.0, horizon=7.5e-4)
        assert m4.potential.c == pytest.approx(4 * glass.potential.c, rel=1e-12)
        assert m4.potential.beta == pytest.approx(glass.potential.beta / 4, rel=1e-12)
        assert m4.mu == pytest.approx(glass.mu, rel=1e-12)

    def test_three_dimensional_convention(self):
        m = calibrate(25e9, 500.0, dim=3)
        assert m.mu == pytest.approx(0.6 * 25e9, rel=1e-12)
        assert bulk_modulus(m) == pytest.approx(25e9, rel=1e-12)

    @pytest.mark.parametrize("k, G", [(0.0, 1.0), (1.0, -1.0)])
    def test_rejects_nonpositive(self, k, G):
        with pytest.raises(DomainError):
            calibrate(k, G)

    def test_wave_speeds(self, glass):
        assert glass.dilatational_wave_speed == pytest.approx(sqrt(3 * 12.5e9 / 1200), rel=1e-12)
        assert glass.shear_wave_speed == pytest.approx(3227.486, rel=1e-6)


@settings(max_examples=60, deadline=None)
@given(k=st.floats(1e6, 1e12), G=st.floats(1e-2, 1e5), dim=st.sampled_from([2, 3]),
       eps=st.floats(1e-5, 1e-1))
def test_calibration_round_trip_property(k, G, dim, eps):
    m = calibrate(k, G, dim=dim, horizon=eps)
    assert bulk_modulus(m) == pytest.approx(k, rel=1e-10)
    assert energy_release_rate(m) == pytest.approx(G, rel=1e-10)


@settings(max_examples=60, deadline=None)
@given(q=st.floats(0.01, 1.0), s=st.floats(0.0, 50.0), t=st.floats(0.0, 50.0))
def test_potential_monotone_and_bounded(q, s, t):
    m = model(c=2.0, beta=3.0)
    lo, hi = sorted((s, t))
    w_lo, w_hi = bond_potential(lo, q, m), bond_potential(hi, q, m)
    assert w_lo <= w_hi
    assert w_hi <= (1.0 - q) / q * 2.0 * (1.0 + 1e-12)


@settings(max_examples=60, deadline=None)
@given(q=st.floats(0.01, 1.0, exclude_max=True), r=st.floats(1.05, 20.0))
def test_softening_beyond_critical_strain(q, r):
    # at q = 1 the influence weight vanishes and every force is exactly zero
    m = model(c=2.0, beta=3.0)
    Sc = float(critical_strain(q, m))
    assert pairwise_force_density(r * Sc, q, m) < pairwise_force_density(Sc, q, m)
    assert force_derivative(r * Sc, q, m) < 0.0
