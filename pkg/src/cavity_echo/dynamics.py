"""
Propagation under a time-independent interaction-picture Hamiltonian.

Two steppers are available:

``expm_eig``
    Dense eigendecomposition ``H = V diag(E) V^+``; the propagator
    ``V exp(-i E t) V^+`` is exact up to linear-algebra round-off and can be
    evaluated on a whole time grid at once.
``rk4``
    Classical Runge-Kutta on the sparse matrix. The step is shrunk until both
    ``dt * |H| <= 0.1`` and the per-unit-time truncation error estimate
    ``|H| z**4 / 120`` (``z = dt |H|``) stay under the tolerance. The norm
    drift, ``|H| z**5 / 144`` per unit time, is then smaller still.

``auto`` picks ``expm_eig`` up to :data:`DENSE_LIMIT` states.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .state_space import HamiltonianMatrix, QuantumState

DENSE_LIMIT = 2000
NORM_FLOOR = 1e-12
RK4_MAX_Z = 0.1


class ToleranceError(RuntimeError):
    """A propagation broke its norm-drift contract."""


@dataclass(frozen=True)
class StepperConfig:
    method: str = "auto"
    dt: float | None = None
    tolerance: float = 1e-9

    def __post_init__(self):
        if self.method not in ("auto", "expm_eig", "rk4"):
            raise ValueError(f"unknown stepper method {self.method!r}")
        if self.dt is not None and not self.dt > 0:
            raise ValueError("dt must be positive")
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")

    def resolve(self, dimension: int) -> str:
        if self.method != "auto":
            return self.method
        return "expm_eig" if dimension <= DENSE_LIMIT else "rk4"


def rk4_step_size(hamiltonian: HamiltonianMatrix, stepper: StepperConfig) -> float:
    hn = hamiltonian.norm_bound
    if hn == 0:
        return math.inf if stepper.dt is None else stepper.dt
    z = min(RK4_MAX_Z, (120.0 * stepper.tolerance / hn) ** 0.25)
    dt = z / hn
    return dt if stepper.dt is None else min(dt, stepper.dt)


def _rk4(h: HamiltonianMatrix, psi: np.ndarray, duration: float, dt: float) -> np.ndarray:
    if duration == 0:
        return psi.copy()
    n = max(1, math.ceil(duration / dt - 1e-12))
    step = duration / n
    A = h.sparse
    y = psi.astype(complex, copy=True)
    for _ in range(n):
        k1 = -1j * (A @ y)
        k2 = -1j * (A @ (y + 0.5 * step * k1))
        k3 = -1j * (A @ (y + 0.5 * step * k2))
        k4 = -1j * (A @ (y + step * k3))
        y = y + (step / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    return y


def evolve_vectors(
    psi: np.ndarray,
    hamiltonian: HamiltonianMatrix,
    times: np.ndarray,
    stepper: StepperConfig | None = None,
) -> np.ndarray:
    """Evolve ``psi`` to every (non-decreasing, >= 0) offset in ``times``.

    Returns an array of shape ``(len(times), dim)``.
    """
    stepper = stepper or StepperConfig()
    times = np.asarray(times, dtype=float)
    if np.any(times < 0) or np.any(np.diff(times) < 0):
        raise ValueError("times must be non-negative and non-decreasing")
    if psi.shape != (hamiltonian.dimension,):
        raise ValueError(
            f"state dimension {psi.shape[0]} != Hamiltonian dimension {hamiltonian.dimension}"
        )
    method = stepper.resolve(hamiltonian.dimension)
    if method == "expm_eig":
        E, V = hamiltonian.eig
        c = V.conj().T @ psi
        out = (V @ (np.exp(-1j * np.outer(E, times)) * c[:, None])).T
    else:
        dt = rk4_step_size(hamiltonian, stepper)
        out = np.empty((len(times), hamiltonian.dimension), dtype=complex)
        y, t_prev = psi, 0.0
        for k, t in enumerate(times):
            y = _rk4(hamiltonian, y, t - t_prev, dt)
            out[k] = y
            t_prev = t
    norm0 = np.linalg.norm(psi)
    drift = np.abs(np.linalg.norm(out, axis=1) - norm0)
    allowed = np.maximum(stepper.tolerance * times * max(norm0, 1.0), NORM_FLOOR)
    bad = np.nonzero(drift > allowed)[0]
    if bad.size:
        k = bad[0]
        raise ToleranceError(
            f"{method}: norm drift {drift[k]:.3e} exceeds {allowed[k]:.3e} at t={times[k]:.6g}"
        )
    return out


def propagate(
    state: QuantumState,
    hamiltonian: HamiltonianMatrix,
    duration: float,
    stepper: StepperConfig | None = None,
) -> QuantumState:
    """Return ``exp(-i H duration) |state>``.

    Raises
    ------
    ToleranceError
        If the norm drifts by more than ``stepper.tolerance * duration``.
    """
    if duration < 0:
        raise ValueError("duration must be >= 0")
    if duration == 0:
        if state.basis.dimension != hamiltonian.dimension:
            raise ValueError("dimension mismatch")
        return state
    vec = evolve_vectors(state.amplitudes, hamiltonian, np.array([duration]), stepper)[0]
    return state.with_amplitudes(vec)


def expectation(state: QuantumState, hamiltonian: HamiltonianMatrix) -> float:
    return float(np.real(np.vdot(state.amplitudes, hamiltonian.apply(state.amplitudes))))
