"""
Closed-form single-excitation solutions in the weak-coupling (Markov) limit.

All functions are vectorized over the time argument. They hold when the
inhomogeneous width is large compared with gamma, for times longer than the
inverse width and shorter than half a comb recurrence time; use
:func:`validity_window` to get those bounds for a concrete ensemble.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .ensemble import EnsembleSpec, decay_rate, recurrence_time


@dataclass(frozen=True)
class OracleParams:
    gamma: float
    tau: float = 0.0

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")
        if not self.tau >= 0:
            raise ValueError("tau must be non-negative")


def tau_d(gamma: float) -> float:
    """Inversion delay ``ln 2 / (2 gamma)`` giving fast absorption."""
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    return math.log(2) / (2 * gamma)


def cph_free_decay(t, gamma):
    return np.exp(-gamma * np.asarray(t, dtype=float))


def cj_free_decay(t, delta, g, gamma):
    """Atomic amplitude ``i g e^{-i D t} int_0^t exp[(i D - gamma) t'] dt'``."""
    t = np.asarray(t, dtype=float)
    z = 1j * np.asarray(delta, dtype=float) - gamma
    z, t = np.broadcast_arrays(z, t)
    small = np.abs(z * t) < 1e-8
    safe_z = np.where(small, 1.0, z)
    integral = np.where(small, t * (1 + z * t / 2), np.expm1(z * t) / safe_z)
    return 1j * g * np.exp(-1j * np.imag(z) * t) * integral


def cph_j0(t, tau, gamma):
    """Field amplitude with a single spectral inversion at ``tau``.

    ``2 e^{-gamma t} - e^{-gamma |t - 2 tau|}`` for ``t >= tau``; free decay before.
    """
    t = np.asarray(t, dtype=float)
    after = 2 * np.exp(-gamma * t) - np.exp(-gamma * np.abs(t - 2 * tau))
    return np.where(t < tau, np.exp(-gamma * t), after)


def p_atoms_j0(t, tau, gamma):
    """Atomic excitation ``1 - c_ph^2`` for the single-inversion protocol."""
    return 1.0 - cph_j0(t, tau, gamma) ** 2


def p_atoms_j0_echo(tau, gamma):
    """Residual atomic excitation at the echo time ``2 tau``."""
    x = np.exp(-2 * gamma * np.asarray(tau, dtype=float))
    return 4 * x * (1 - x)


def cph_fast_absorption(t, gamma):
    """Field amplitude for inversion at ``tau_D``: vanishes for ``t >= 2 tau_D``."""
    t = np.asarray(t, dtype=float)
    td = tau_d(gamma)
    mid = 2 * np.exp(-gamma * t) - 0.5 * np.exp(gamma * t)
    out = np.where(t <= td, np.exp(-gamma * t), mid)
    return np.where(t >= 2 * td, 0.0, out)


def p_atoms_fast_absorption(t, gamma):
    t = np.asarray(t, dtype=float)
    td = tau_d(gamma)
    mid = 3 - (4 * np.exp(-2 * gamma * t) + 0.25 * np.exp(2 * gamma * t))
    out = np.where(t <= td, 1 - np.exp(-2 * gamma * t), mid)
    return np.where(t >= 2 * td, 1.0, out)


def multiphoton_echo_map(amplitudes):
    """Fock amplitudes after a single inversion in the complete-absorption limit:
    ``C_n -> (-1)^n C_n``."""
    c = np.asarray(amplitudes, dtype=complex)
    return c * (-1.0) ** np.arange(len(c))


def dephasing_kernel(ensemble: EnsembleSpec, s):
    """Exact finite sum ``sum_j |g_j|^2 exp(i D_j s)``."""
    s = np.asarray(s, dtype=float)
    g2 = np.abs(np.asarray(ensemble.couplings)) ** 2
    d = np.asarray(ensemble.detunings2)
    return np.exp(1j * np.multiply.outer(s, d)) @ g2


def comb_dirichlet_kernel(n_atoms: int, total_width: float, coupling_sq: float, s):
    """Closed form of :func:`dephasing_kernel` for a midpoint comb:
    ``|g|^2 sin(W s / 2) / sin(W s / 2N)``."""
    s = np.asarray(s, dtype=float)
    num = np.sin(total_width * s / 2)
    den = np.sin(total_width * s / (2 * n_atoms))
    small = np.abs(den) < 1e-12
    # at den -> 0 the ratio tends to N * (+-1)
    limit = n_atoms * np.cos(total_width * s / 2) / np.cos(total_width * s / (2 * n_atoms))
    return coupling_sq * np.where(small, limit, num / np.where(small, 1.0, den))


@dataclass(frozen=True)
class ValidityWindow:
    gamma: float
    width: float
    gamma_over_width: float
    t_min: float
    t_max: float

    @property
    def markov_ok(self) -> bool:
        return self.gamma_over_width <= 0.1

    def contains(self, t):
        t = np.asarray(t, dtype=float)
        return (t >= self.t_min) & (t <= self.t_max)


def validity_window(ensemble: EnsembleSpec) -> ValidityWindow:
    gamma = decay_rate(ensemble)
    width = ensemble.meta.width
    ratio = gamma / width if width > 0 else math.inf
    t_min = 1.0 / width if width > 0 else math.inf
    return ValidityWindow(gamma, width, ratio, t_min, recurrence_time(ensemble) / 2)


@dataclass(frozen=True)
class OracleComparison:
    max_error: float
    max_error_in_window: float
    n_points: int
    n_outside_validity: int
    tolerance: float
    window: ValidityWindow

    @property
    def passed(self) -> bool:
        return self.window.markov_ok and self.max_error_in_window <= self.tolerance

    def describe(self) -> str:
        if not self.window.markov_ok:
            return (
                f"outside model validity (gamma/width={self.window.gamma_over_width:.3g}); "
                f"max error {self.max_error:.3g}"
            )
        status = "ok" if self.passed else "FAIL"
        return (
            f"{status}: max error {self.max_error_in_window:.3g} <= {self.tolerance:g} "
            f"on {self.n_points - self.n_outside_validity} points "
            f"({self.n_outside_validity} outside validity window)"
        )


def compare(t, simulated, expected, ensemble: EnsembleSpec, tolerance: float = 0.02):
    """Absolute-error comparison restricted to the ensemble's validity window."""
    window = validity_window(ensemble)
    t = np.asarray(t, dtype=float)
    err = np.abs(np.asarray(simulated) - np.asarray(expected))
    inside = window.contains(t)
    return OracleComparison(
        float(err.max()) if err.size else 0.0,
        float(err[inside].max()) if inside.any() else 0.0,
        int(t.size),
        int((~inside).sum()),
        tolerance,
        window,
    )


SCENARIOS = ("free", "j0", "fast")


def scenario_curves(scenario: str, t, gamma: float, tau: float | None = None):
    """``(c_ph, p_atoms)`` closed forms for one of :data:`SCENARIOS`."""
    t = np.asarray(t, dtype=float)
    if scenario == "free":
        c = cph_free_decay(t, gamma)
        return c, 1 - c**2
    if scenario == "j0":
        if tau is None:
            raise ValueError("scenario 'j0' needs tau")
        return cph_j0(t, tau, gamma), p_atoms_j0(t, tau, gamma)
    if scenario == "fast":
        return cph_fast_absorption(t, gamma), p_atoms_fast_absorption(t, gamma)
    raise ValueError(f"unknown scenario {scenario!r}; expected one of {SCENARIOS}")
