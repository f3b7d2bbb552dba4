import math

import numpy as np
import pytest
from scipy.integrate import quad

from cavity_echo import make_comb, reference_ensemble
from cavity_echo.ensemble import recurrence_time
from cavity_echo.oracle import (
    OracleParams,
    comb_dirichlet_kernel,
    compare,
    cj_free_decay,
    cph_fast_absorption,
    cph_free_decay,
    cph_j0,
    dephasing_kernel,
    multiphoton_echo_map,
    p_atoms_fast_absorption,
    p_atoms_j0_echo,
    scenario_curves,
    tau_d,
    validity_window,
)

LN2 = math.log(2)


def test_params_validation():
    with pytest.raises(ValueError):
        OracleParams(0.0)
    with pytest.raises(ValueError):
        OracleParams(1.0, -1.0)


class TestFrozenValues:
    def test_tau_d(self):
        assert tau_d(1.0) == pytest.approx(0.346574, abs=1e-6)
        assert tau_d(2.0) == pytest.approx(0.173287, abs=1e-6)
        assert tau_d(0.5 * LN2) == pytest.approx(1.0)
        with pytest.raises(ValueError):
            tau_d(0.0)

    def test_free_decay(self):
        assert cph_free_decay(0.0, 3.0) == 1.0
        assert cph_free_decay(LN2 / 2.5, 2.5) == pytest.approx(0.5)

    def test_j0(self):
        assert cph_j0(6.0, 3.0, 1.0) == pytest.approx(-0.995042, abs=1e-6)
        assert cph_j0(1.0, 1.0, 1.7) == pytest.approx(math.exp(-1.7))
        assert cph_j0(80.0, 40.0, 1.0) == pytest.approx(-1.0)

    def test_fast_absorption(self):
        td = tau_d(1.0)
        assert cph_fast_absorption(2 * td, 1.0) == pytest.approx(0.0, abs=1e-15)
        assert cph_fast_absorption(1.5 * td, 1.0) == pytest.approx(0.348311, abs=1e-6)
        assert cph_fast_absorption(1.5 * td, 1.0) == pytest.approx(2**0.25 - 2**-0.25)
        assert cph_fast_absorption(3 * td, 1.0) == 0.0
        assert p_atoms_fast_absorption(1.5 * td, 1.0) == pytest.approx(0.878680, abs=1e-6)
        assert p_atoms_fast_absorption(2 * td, 1.0) == 1.0
        assert p_atoms_fast_absorption(td, 1.0) == pytest.approx(0.5)

    def test_j0_echo_residual(self):
        assert p_atoms_j0_echo(0.5 * LN2, 1.0) == pytest.approx(1.0)
        assert p_atoms_j0_echo(0.0, 1.0) == 0.0
        assert p_atoms_j0_echo(50.0, 1.0) == pytest.approx(0.0, abs=1e-40)
        assert p_atoms_j0_echo(0.05, 1.0) > 0

    def test_multiphoton_map(self):
        np.testing.assert_array_equal(multiphoton_echo_map([1, 0, 0]), [1, 0, 0])
        np.testing.assert_array_equal(multiphoton_echo_map([0, 1, 0]), [0, -1, 0])
        c = np.array([0.3, 0.5j, -0.2 + 0.1j])
        np.testing.assert_array_equal(multiphoton_echo_map(c), [c[0], -c[1], c[2]])
        np.testing.assert_array_equal(multiphoton_echo_map(multiphoton_echo_map(c)), c)


class TestAtomicAmplitude:
    @pytest.mark.parametrize("delta", [0.0, 0.7, -3.0])
    def test_against_quadrature(self, delta):
        g, gamma, t = 0.3, 1.2, 1.9
        re = quad(lambda s: (np.exp((1j * delta - gamma) * s)).real, 0, t)[0]
        im = quad(lambda s: (np.exp((1j * delta - gamma) * s)).imag, 0, t)[0]
        expected = 1j * g * np.exp(-1j * delta * t) * (re + 1j * im)
        assert cj_free_decay(t, delta, g, gamma) == pytest.approx(expected, abs=1e-12)

    def test_limits(self):
        assert cj_free_decay(0.0, 0.4, 0.3, 1.0) == 0
        assert cj_free_decay(60.0, 0.0, 0.3, 1.5) == pytest.approx(0.2j)
        # gamma -> 0 on resonance: i g t
        assert cj_free_decay(2.0, 0.0, 0.3, 1e-12) == pytest.approx(0.6j, abs=1e-10)

    def test_norm_sum_dense_comb(self):
        ens = reference_ensemble()
        gamma = 1.0
        g = np.asarray(ens.couplings)
        d = np.asarray(ens.detunings2)
        for t in (0.5, 1.0, 2.0):
            total = np.sum(np.abs(cj_free_decay(t, d, g, gamma)) ** 2) + math.exp(-2 * gamma * t)
            assert total == pytest.approx(1.0, abs=0.02)


class TestIdentities:
    @pytest.mark.parametrize("gamma", [0.3, 1.0, 4.0])
    def test_continuity(self, gamma):
        td = tau_d(gamma)
        eps = 1e-15
        for f in (cph_fast_absorption, p_atoms_fast_absorption):
            assert abs(f(td + eps, gamma) - f(td, gamma)) <= 1e-12
            assert abs(f(2 * td - eps, gamma) - f(2 * td, gamma)) <= 1e-12
        tau = 0.8 / gamma
        assert abs(cph_j0(tau, tau, gamma) - cph_free_decay(tau, gamma)) <= 1e-12
        assert abs(cph_j0(tau * (1 - 1e-15), tau, gamma) - cph_j0(tau, tau, gamma)) <= 1e-12

    @pytest.mark.parametrize("gamma", [0.3, 1.0, 4.0])
    def test_fast_absorption_conservation(self, gamma):
        td = tau_d(gamma)
        t = np.linspace(td, 2 * td, 101)[1:-1]
        total = cph_fast_absorption(t, gamma) ** 2 + p_atoms_fast_absorption(t, gamma)
        np.testing.assert_allclose(total, 1.0, atol=1e-12, rtol=0)

    def test_no_inversion_limit(self):
        t = np.linspace(0, 5, 50)
        np.testing.assert_allclose(cph_j0(t, 1e6, 1.0), cph_free_decay(t, 1.0), atol=1e-15)


class TestKernel:
    def test_zero_lag(self):
        ens = make_comb(40, 10.0, 0.2 + 0.1j)
        assert dephasing_kernel(ens, 0.0) == pytest.approx(40 * 0.05)

    @pytest.mark.parametrize("n", [7, 8])
    def test_matches_dirichlet_form(self, n):
        ens = make_comb(n, 3.0, 0.4)
        s = np.linspace(0, 3 * recurrence_time(ens), 301)
        np.testing.assert_allclose(
            dephasing_kernel(ens, s), comb_dirichlet_kernel(n, 3.0, 0.16, s), atol=1e-10
        )

    @pytest.mark.parametrize("n", [7, 8])
    def test_recurrence(self, n):
        ens = make_comb(n, 3.0, 0.4)
        T = recurrence_time(ens)
        s = np.linspace(0, T, 97)
        k0, k1 = dephasing_kernel(ens, s), dephasing_kernel(ens, s + T)
        # midpoint comb: antiperiodic for even N, modulus always periodic
        np.testing.assert_allclose(k1, (-1) ** (n + 1) * k0, atol=1e-10)
        np.testing.assert_allclose(dephasing_kernel(ens, s + 2 * T), k0, atol=1e-9)

    def test_markov_window_small(self):
        ens = reference_ensemble()
        s = np.linspace(0.5, recurrence_time(ens) / 2, 400)
        assert np.max(np.abs(dephasing_kernel(ens, s))) < 0.1 * abs(dephasing_kernel(ens, 0.0))


class TestValidity:
    def test_window(self):
        w = validity_window(reference_ensemble())
        assert w.gamma == pytest.approx(1.0)
        assert w.gamma_over_width == pytest.approx(0.01)
        assert w.markov_ok
        assert w.t_min == pytest.approx(0.01)
        assert w.t_max == pytest.approx(4 * math.pi)

    def test_compare_reports_outside(self):
        ens = make_comb(20, 2.0, 0.3)  # gamma/W ~ 1.4, far from Markov
        t = np.linspace(0, 1, 5)
        res = compare(t, np.zeros(5), np.zeros(5), ens)
        assert not res.passed
        assert "outside model validity" in res.describe()

    def test_compare_excludes_points_outside_window(self):
        ens = reference_ensemble()
        t = np.array([0.0, 1.0, 100.0])
        res = compare(t, [5.0, 0.0, 5.0], [0.0, 0.0, 0.0], ens)
        assert res.n_outside_validity == 2
        assert res.passed and res.max_error == 5.0

    def test_scenarios(self):
        t = np.linspace(0, 2, 9)
        c, p = scenario_curves("free", t, 1.0)
        np.testing.assert_allclose(c**2 + p, 1.0)
        with pytest.raises(ValueError):
            scenario_curves("j0", t, 1.0)
        with pytest.raises(ValueError):
            scenario_curves("bogus", t, 1.0)
