import math

import numpy as np
import pytest

from bruteforce import random_state
from cavity_echo import (
    QuantumState,
    StepperConfig,
    ToleranceError,
    build_hamiltonian,
    enumerate_basis,
    expectation,
    fock_state,
    make_comb,
    propagate,
)
from cavity_echo.dynamics import evolve_vectors, rk4_step_size
from cavity_echo.ensemble import DistributionMeta, EnsembleSpec


def single_atom(g, delta):
    return EnsembleSpec(1, (g,), (delta,), (delta,), DistributionMeta("comb", 1.0, 1.0))


EIG = StepperConfig("expm_eig")
RK4 = StepperConfig("rk4")


def test_zero_duration_identity():
    psi = fock_state(3, 1)
    H = build_hamiltonian(make_comb(3, 1.0, 0.2), psi.basis)
    assert propagate(psi, H, 0.0) is psi


@pytest.mark.parametrize("stepper", [EIG, RK4])
def test_resonant_rabi(stepper):
    g = 0.8
    psi = fock_state(1, 1)
    H = build_hamiltonian(single_atom(g, 0.0), psi.basis)
    for t in (0.3, 1.7, 5.0):
        out = propagate(psi, H, t, stepper).amplitudes
        np.testing.assert_allclose(out, [math.cos(g * t), 1j * math.sin(g * t)], atol=1e-8)


@pytest.mark.parametrize("stepper", [EIG, RK4])
def test_detuned_rabi(stepper):
    g, delta = 0.6, 1.3
    omega_r = math.sqrt(delta**2 + 4 * g**2)
    psi = fock_state(1, 1)
    H = build_hamiltonian(single_atom(g, delta), psi.basis)
    for t in (0.5, 2.0, 7.5):
        p = abs(propagate(psi, H, t, stepper).amplitudes[0]) ** 2
        expected = 1 - (4 * g**2 / omega_r**2) * math.sin(omega_r * t / 2) ** 2
        assert p == pytest.approx(expected, abs=1e-8)


def test_dimension_mismatch():
    H = build_hamiltonian(make_comb(3, 1.0, 0.2), enumerate_basis(3, 1))
    with pytest.raises(ValueError):
        propagate(fock_state(3, 2), H, 1.0)


def test_negative_duration():
    psi = fock_state(2, 1)
    with pytest.raises(ValueError):
        propagate(psi, build_hamiltonian(make_comb(2, 1.0, 0.1), psi.basis), -1.0)


def test_rk4_large_dt_is_reduced():
    psi = fock_state(4, 1)
    H = build_hamiltonian(make_comb(4, 10.0, 1.0), psi.basis)
    ok = propagate(psi, H, 1.0, StepperConfig("rk4", dt=1.0))
    assert abs(ok.norm() - 1) <= 1e-9


def test_rk4_tolerance_failure_is_reported(monkeypatch):
    import cavity_echo.dynamics as dyn

    psi = fock_state(4, 1)
    H = build_hamiltonian(make_comb(4, 10.0, 1.0), psi.basis)
    monkeypatch.setattr(dyn, "rk4_step_size", lambda h, s: 0.5 / h.norm_bound)
    with pytest.raises(ToleranceError, match="norm drift"):
        propagate(psi, H, 1.0, StepperConfig("rk4"))


def test_rk4_step_respects_bounds():
    H = build_hamiltonian(make_comb(20, 40.0, 0.5), enumerate_basis(20, 1))
    dt = rk4_step_size(H, StepperConfig("rk4"))
    assert dt * H.norm_bound <= 0.1 + 1e-12
    assert H.norm_bound * (dt * H.norm_bound) ** 4 / 120 <= 1e-9 * (1 + 1e-12)
    assert H.norm_bound * (dt * H.norm_bound) ** 5 / 144 <= 1e-9


@pytest.mark.parametrize("n_atoms, t", [(10, 10.0), (50, 4.0), (30, 10.0)])
def test_stepper_equivalence(n_atoms, t, rng):
    ens = make_comb(n_atoms, 5.0, 0.3)
    psi = random_state(enumerate_basis(n_atoms, 1), rng)
    H = build_hamiltonian(ens, psi.basis)
    a = propagate(psi, H, t, EIG).amplitudes
    b = propagate(psi, H, t, RK4).amplitudes
    assert np.linalg.norm(a - b) <= 1e-6


def test_stepper_equivalence_two_excitations(rng):
    ens = make_comb(8, 3.0, 0.4)
    psi = random_state(enumerate_basis(8, 2), rng)
    H = build_hamiltonian(ens, psi.basis)
    assert np.linalg.norm(
        propagate(psi, H, 6.0, EIG).amplitudes - propagate(psi, H, 6.0, RK4).amplitudes
    ) <= 1e-6


@pytest.mark.parametrize("stepper", [EIG, RK4])
def test_energy_conserved(stepper, rng):
    ens = make_comb(12, 4.0, 0.5)
    psi = random_state(enumerate_basis(12, 2), rng)
    H = build_hamiltonian(ens, psi.basis)
    e0 = expectation(psi, H)
    for t in (1.0, 3.0):
        assert expectation(propagate(psi, H, t, stepper), H) == pytest.approx(e0, rel=1e-8)


def test_norm_drift_bound(rng):
    ens = make_comb(40, 8.0, 0.5)
    psi = random_state(enumerate_basis(40, 1), rng)
    H = build_hamiltonian(ens, psi.basis)
    for stepper in (EIG, RK4):
        out = propagate(psi, H, 5.0, stepper)
        assert abs(out.norm() - 1) <= 1e-9 * 5.0


def test_evolve_grid_matches_single_calls(rng):
    ens = make_comb(7, 2.0, 0.3)
    psi = random_state(enumerate_basis(7, 1), rng)
    H = build_hamiltonian(ens, psi.basis)
    grid = np.array([0.5, 1.0, 2.5])
    vecs = evolve_vectors(psi.amplitudes, H, grid, RK4)
    for t, v in zip(grid, vecs):
        np.testing.assert_allclose(v, propagate(psi, H, t, EIG).amplitudes, atol=1e-7)


def test_auto_selects_by_dimension():
    assert StepperConfig().resolve(2000) == "expm_eig"
    assert StepperConfig().resolve(2001) == "rk4"
    with pytest.raises(ValueError):
        StepperConfig("euler")
