"""
Piecewise evolution through a protocol schedule.

Between events the Hamiltonian is constant; instantaneous events act as
amplitude maps (kick) or swap the Hamiltonian (inversion) exactly at their
timestamps. Each interval gets its own uniform sample grid so no sample ever
straddles an event.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .dynamics import StepperConfig, ToleranceError, evolve_vectors
from .ensemble import EnsembleSpec, decay_rate
from .oracle import multiphoton_echo_map
from .protocol import (
    INVERT,
    KICK,
    PULSE,
    ProtocolSchedule,
    RunContext,
    apply_frequency_inversion,
    apply_impulsive_2pi,
)
from .state_space import (
    BasisIndex,
    BasisState,
    HamiltonianMatrix,
    QuantumState,
    SectorState,
    build_hamiltonian,
    enumerate_basis,
)


@dataclass
class TimeSeries:
    """Observables sampled on the run's time grid.

    ``cph`` is the amplitude of ``|1> (x) |g>``; ``photon_probs[k, n]`` is the
    probability of ``n`` photons at ``t[k]``. CSV columns ``p_n`` are only
    emitted when more than one photon can be present.
    """

    t: np.ndarray
    cph: np.ndarray
    p_atoms: np.ndarray
    norm: np.ndarray
    photon_probs: np.ndarray | None = None
    final_state: QuantumState | SectorState | None = None
    final_ensemble: EnsembleSpec | None = None
    snapshots: dict[float, QuantumState | SectorState] = field(default_factory=dict)

    @property
    def abs2_cph(self) -> np.ndarray:
        return np.abs(self.cph) ** 2

    def at(self, time: float) -> int:
        """Index of the sample closest to ``time``."""
        return int(np.argmin(np.abs(self.t - time)))

    def columns(self) -> dict[str, np.ndarray]:
        cols = {
            "t": self.t,
            "re_cph": self.cph.real,
            "im_cph": self.cph.imag,
            "abs2_cph": self.abs2_cph,
            "p_atoms": self.p_atoms,
            "norm": self.norm,
        }
        if self.photon_probs is not None and self.photon_probs.shape[1] > 2:
            for n in range(self.photon_probs.shape[1]):
                cols[f"p_{n}"] = self.photon_probs[:, n]
        return cols


@lru_cache(maxsize=32)
def _basis(n_atoms: int, n_exc: int, three_level: bool) -> BasisIndex:
    return enumerate_basis(n_atoms, n_exc, three_level)


@lru_cache(maxsize=32)
def _hamiltonian(ensemble: EnsembleSpec, n_exc: int, three_level: bool, control) -> HamiltonianMatrix:
    basis = _basis(ensemble.n_atoms, n_exc, three_level)
    return build_hamiltonian(ensemble, basis, "minus", control)


def _hamiltonian_for(ensemble: EnsembleSpec, basis: BasisIndex, control=None):
    if basis.n_atoms != ensemble.n_atoms:
        raise ValueError("state and ensemble have different atom numbers")
    canonical = _basis(basis.n_atoms, basis.n_exc, basis.three_level)
    if basis is canonical or basis.states == canonical.states:
        return _hamiltonian(ensemble, basis.n_exc, basis.three_level, control)
    return build_hamiltonian(ensemble, basis, "minus", control)


def _ground_fock(n_atoms: int, photons: int, three_level: bool) -> QuantumState:
    basis = _basis(n_atoms, photons, three_level)
    amps = np.zeros(basis.dimension, dtype=complex)
    amps[basis.index(BasisState(photons))] = 1.0
    return QuantumState(basis, amps)


def _grid(length: float, sample_dt: float) -> np.ndarray:
    n = max(1, math.ceil(length / sample_dt - 1e-9))
    return np.arange(1, n + 1) * (length / n)


def _observables(basis: BasisIndex, vecs: np.ndarray):
    i1 = basis.lookup.get(BasisState(1))
    cph = vecs[:, i1] if i1 is not None else np.zeros(len(vecs), dtype=complex)
    probs = np.abs(vecs) ** 2
    p_atoms = probs[:, basis.atoms_excited_mask].sum(axis=1)
    onehot = np.zeros((basis.dimension, basis.n_exc + 1))
    onehot[np.arange(basis.dimension), basis.photon_counts] = 1.0
    return cph, p_atoms, np.sqrt(probs.sum(axis=1)), probs @ onehot


def run_timeline(
    initial: QuantumState,
    ensemble: EnsembleSpec,
    schedule: ProtocolSchedule,
    sample_dt: float,
    stepper: StepperConfig | None = None,
    checkpoints=(),
) -> TimeSeries:
    """Evolve ``initial`` through ``schedule`` and sample observables.

    Parameters
    ----------
    initial : QuantumState
        Normalized start state; must be three-level if the schedule has pulses.
    ensemble : EnsembleSpec
        Ensemble in force at t = 0. ``tauD`` schedules resolve against its gamma.
    schedule : ProtocolSchedule
    sample_dt : float
        Upper bound on the sampling step; each interval is divided evenly.
    stepper : StepperConfig, optional
    checkpoints : iterable of float
        Times at which the full state is stored in ``snapshots`` (after any
        events at that instant).

    Raises
    ------
    ToleranceError
        If the norm drifts by more than ``tolerance * t_end`` over the run.
    """
    stepper = stepper or StepperConfig()
    if not sample_dt > 0:
        raise ValueError("sample_dt must be positive")
    if abs(initial.norm() - 1) > 1e-9:
        raise ValueError("initial state must be normalized")
    if schedule.unit != "absolute":
        schedule = schedule.resolve(decay_rate(ensemble))
    if schedule.has_pulses and not initial.basis.three_level:
        raise ValueError("schedule contains finite pulses; use a three-level basis")
    basis = initial.basis
    t_end = schedule.end_time
    checkpoints = sorted({float(c) for c in checkpoints})
    if checkpoints and (checkpoints[0] < 0 or checkpoints[-1] > t_end):
        raise ValueError("checkpoints must lie within [0, end]")

    eps = 1e-12 * max(t_end, 1.0)
    for c in checkpoints:
        for e in schedule.controls:
            if e.time + eps < c < e.end_time - eps:
                raise ValueError(f"checkpoint {c} falls inside the pulse at {e.time}")

    # breakpoints: (time, event or None)
    marks: list[tuple[float, object]] = [(e.time, e) for e in schedule.controls]
    marks += [
        (c, None)
        for c in checkpoints
        if not any(abs(c - e.time) <= eps for e in schedule.controls)
    ]
    marks.append((t_end, None))
    marks.sort(key=lambda m: m[0])

    ctx = RunContext(ensemble)
    psi = initial.amplitudes.copy()
    ts = [np.array([0.0])]
    cph, pat, nrm, pn = _observables(basis, psi[None, :])
    cphs, pats, norms, pns = [cph], [pat], [nrm], [pn]
    snapshots: dict[float, QuantumState] = {}
    t_now = 0.0

    def fire(event):
        nonlocal psi, ctx
        for op in event.primitives():
            if op == KICK:
                psi = apply_impulsive_2pi(QuantumState(basis, psi)).amplitudes.copy()
            elif op == INVERT:
                ctx = apply_frequency_inversion(ctx, event.time)

    def advance(t_target, control=None):
        nonlocal psi, t_now
        length = t_target - t_now
        if length <= 0:
            return
        offsets = _grid(length, sample_dt)
        h = _hamiltonian_for(ctx.ensemble, basis, control)
        vecs = evolve_vectors(psi, h, offsets, stepper)
        c, p, n, pn = _observables(basis, vecs)
        ts.append(t_now + offsets)
        cphs.append(c)
        pats.append(p)
        norms.append(n)
        pns.append(pn)
        psi = vecs[-1].copy()
        t_now = t_target

    for time, event in marks:
        advance(time)
        if event is not None:
            if event.kind == PULSE:
                omega0 = event.theta / event.duration
                control = (omega0, event.phases)
                advance(event.end_time, _freeze(control))
            else:
                fire(event)
        for c in checkpoints:
            if abs(time - c) <= eps:
                snapshots[c] = QuantumState(basis, psi)

    norm = np.concatenate(norms)
    drift = abs(norm[-1] - 1.0)
    allowed = max(stepper.tolerance * t_end, 1e-12)
    if drift > allowed:
        raise ToleranceError(f"run norm drift {drift:.3e} exceeds {allowed:.3e}")
    return TimeSeries(
        t=np.concatenate(ts),
        cph=np.concatenate(cphs),
        p_atoms=np.concatenate(pats),
        norm=norm,
        photon_probs=np.concatenate(pns),
        final_state=QuantumState(basis, psi),
        final_ensemble=ctx.ensemble,
        snapshots=snapshots,
    )


def _freeze(control):
    omega0, phases = control
    return (float(omega0), None if phases is None else tuple(float(p) for p in phases))


@dataclass
class SectorEvolution:
    """Outcome of evolving a field superposition sector by sector."""

    input_field: np.ndarray
    recovered_field: np.ndarray
    residual_atomic: np.ndarray
    input_overlap: float
    echo_map_overlap: float
    final_state: SectorState
    series: TimeSeries
    initial_state: SectorState


def sector_evolve(
    field_amplitudes,
    ensemble: EnsembleSpec,
    schedule: ProtocolSchedule,
    n_max: int | None = None,
    sample_dt: float | None = None,
    stepper: StepperConfig | None = None,
    three_level: bool = False,
    checkpoints=(),
) -> SectorEvolution:
    """Evolve ``sum_n C_n |n>|g>`` with each excitation sector run independently.

    ``recovered_field[n]`` is the amplitude of ``|n>|g>`` at the end of the
    schedule; ``residual_atomic[n]`` is the atomic excitation left in sector n
    relative to its input weight. Overlaps are ``|<target|final>|^2`` against
    the input field and against the ``(-1)^n`` echo map of it.
    """
    c = np.asarray(field_amplitudes, dtype=complex)
    if n_max is None:
        n_max = len(c) - 1
    c = np.pad(c, (0, max(0, n_max + 1 - len(c))))[: n_max + 1]
    norm = np.linalg.norm(c)
    if norm == 0:
        raise ValueError("field state is zero")
    c = c / norm
    probs = np.abs(c) ** 2
    mean_n = float(np.dot(np.arange(len(c)), probs))
    if mean_n >= ensemble.n_atoms:
        raise ValueError(
            f"mean photon number {mean_n:.3g} must be below the atom number {ensemble.n_atoms}"
        )
    schedule = schedule.resolve(decay_rate(ensemble))
    if sample_dt is None:
        sample_dt = schedule.end_time / 200

    recovered = np.zeros(len(c), dtype=complex)
    residual = np.zeros(len(c))
    comps = []
    initial_comps = []
    snapshots: dict[float, list[QuantumState]] = {}
    t = None
    cph = p_atoms = norm2 = photon_probs = None
    for n, cn in enumerate(c):
        if cn == 0:
            continue
        init = _ground_fock(ensemble.n_atoms, n, three_level)
        initial_comps.append(init.scaled(cn))
        series = run_timeline(init, ensemble, schedule, sample_dt, stepper, checkpoints)
        for tc, snap in series.snapshots.items():
            snapshots.setdefault(tc, []).append(snap.scaled(cn))
        final = series.final_state
        amp = final.amplitude(BasisState(n))
        recovered[n] = cn * amp
        residual[n] = 1.0 - abs(amp) ** 2
        comps.append(final.scaled(cn))
        w = abs(cn) ** 2
        if t is None:
            t = series.t
            cph = np.zeros(len(t), dtype=complex)
            p_atoms = np.zeros(len(t))
            norm2 = np.zeros(len(t))
            photon_probs = np.zeros((len(t), len(c)))
        if n == 1:
            cph += cn * series.cph
        p_atoms += w * series.p_atoms
        norm2 += w * series.norm**2
        # photon marginal for this sector: photons = n - excited atoms
        photon_probs[:, : n + 1] += w * series.photon_probs
        final_ensemble = series.final_ensemble
    final_state = SectorState(tuple(comps))
    target_in = c
    target_echo = np.asarray(multiphoton_echo_map(c))
    ov_in = abs(np.vdot(target_in, recovered)) ** 2
    ov_echo = abs(np.vdot(target_echo, recovered)) ** 2
    series = TimeSeries(
        t=t,
        cph=cph,
        p_atoms=p_atoms,
        norm=np.sqrt(norm2),
        photon_probs=photon_probs,
        final_state=final_state,
        final_ensemble=final_ensemble,
        snapshots={tc: SectorState(tuple(v)) for tc, v in snapshots.items()},
    )
    return SectorEvolution(
        c, recovered, residual, ov_in, ov_echo, final_state, series,
        SectorState(tuple(initial_comps)),
    )
