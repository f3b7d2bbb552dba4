"""
Control events: spectral inversion, the 2pi kick and finite control pulses,
plus the line-oriented schedule format.

Schedule format::

    # comment
    unit tauD                 (or "unit absolute", the default)
    J0 at 1.0
    J2PI at 5.0
    PULSE theta=6.283185307 dt=0.001 at 7.0
    end at 12.0

``J0`` is an alias of ``INVERT``; ``J2PI`` is ``KICK`` followed by ``INVERT``
at the same instant. Times given in ``tauD`` units are resolved with
``tau_D = ln 2 / (2 gamma)`` of the ensemble the schedule is run on.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field, replace

import numpy as np

from .dynamics import StepperConfig, propagate
from .ensemble import EnsembleSpec, invert_detunings
from .state_space import QuantumState, build_hamiltonian

INVERT = "INVERT"
KICK = "KICK"
J0 = "J0"
J2PI = "J2PI"
PULSE = "PULSE"
END = "END"
EVENT_KINDS = (INVERT, KICK, J0, J2PI, PULSE, END)


class ScheduleError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass(frozen=True)
class ProtocolEvent:
    time: float
    kind: str
    theta: float | None = None
    duration: float = 0.0
    phases: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.kind not in EVENT_KINDS:
            raise ScheduleError(f"unknown event {self.kind!r}")
        if not self.time >= 0:
            raise ScheduleError(f"event time must be >= 0, got {self.time}")
        if self.kind == PULSE:
            if self.theta is None or not self.theta > 0 or not self.duration > 0:
                raise ScheduleError("PULSE needs theta > 0 and dt > 0")
        elif self.duration:
            raise ScheduleError(f"{self.kind} is instantaneous")

    def primitives(self) -> tuple[str, ...]:
        """Instantaneous operations in application order."""
        if self.kind in (INVERT, J0):
            return (INVERT,)
        if self.kind == J2PI:
            return (KICK, INVERT)
        if self.kind == KICK:
            return (KICK,)
        return ()

    @property
    def end_time(self) -> float:
        return self.time + self.duration

    def scaled(self, factor: float) -> "ProtocolEvent":
        return replace(self, time=self.time * factor, duration=self.duration * factor)


@dataclass(frozen=True)
class ProtocolSchedule:
    events: tuple[ProtocolEvent, ...]
    unit: str = "absolute"

    def __post_init__(self):
        if self.unit not in ("absolute", "tauD"):
            raise ScheduleError(f"unknown unit {self.unit!r}")
        _validate(self.events)

    @property
    def end_time(self) -> float:
        return self.events[-1].time

    @property
    def controls(self) -> tuple[ProtocolEvent, ...]:
        return self.events[:-1]

    @property
    def has_pulses(self) -> bool:
        return any(e.kind == PULSE for e in self.events)

    def resolve(self, gamma: float) -> "ProtocolSchedule":
        """Absolute-time copy; ``tauD`` units use ``ln 2 / (2 gamma)``."""
        if self.unit == "absolute":
            return self
        if not (gamma > 0 and math.isfinite(gamma)):
            raise ScheduleError("tauD units need a finite positive gamma")
        factor = math.log(2) / (2 * gamma)
        return ProtocolSchedule(tuple(e.scaled(factor) for e in self.events), "absolute")

    @classmethod
    def from_events(cls, events, end: float, unit: str = "absolute") -> "ProtocolSchedule":
        return cls(tuple(events) + (ProtocolEvent(end, END),), unit)


def _validate(events, lines=None) -> None:
    def where(k):
        return None if lines is None else lines[k]

    if not events or events[-1].kind != END:
        raise ScheduleError("schedule must finish with an 'end' event")
    ends = [k for k, e in enumerate(events) if e.kind == END]
    if len(ends) > 1:
        raise ScheduleError("duplicate end event", where(ends[1]))
    for k in range(1, len(events)):
        prev, cur = events[k - 1], events[k]
        if cur.time <= prev.time:
            raise ScheduleError(
                f"non-monotone event times ({cur.time} after {prev.time})", where(k)
            )
        if cur.time < prev.end_time:
            raise ScheduleError(
                f"event at {cur.time} overlaps pulse ending at {prev.end_time}", where(k)
            )


_EVENT_RE = re.compile(
    r"^(?P<name>[A-Za-z0-9]+)(?P<params>(?:\s+\w+\s*=\s*\S+)*)\s+at\s+(?P<time>\S+)$"
)


def parse_protocol(text: str) -> ProtocolSchedule:
    """Parse a schedule file. Raises :class:`ScheduleError` with a line number."""
    unit = "absolute"
    events: list[ProtocolEvent] = []
    lines: list[int] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.lower().startswith("unit"):
            parts = line.split()
            if events or len(parts) != 2:
                raise ScheduleError("'unit' must be a single directive before events", lineno)
            unit = {"taud": "tauD", "absolute": "absolute"}.get(parts[1].lower())
            if unit is None:
                raise ScheduleError(f"unknown unit {parts[1]!r}", lineno)
            continue
        m = _EVENT_RE.match(line)
        if not m:
            raise ScheduleError(f"syntax error: {raw.strip()!r}", lineno)
        name = m["name"].upper()
        if name not in EVENT_KINDS:
            raise ScheduleError(f"unknown event name {m['name']!r}", lineno)
        if events and events[-1].kind == END:
            raise ScheduleError("event after end", lineno)
        try:
            time = float(m["time"])
            params = {
                k.lower(): float(v)
                for k, v in re.findall(r"(\w+)\s*=\s*(\S+)", m["params"] or "")
            }
        except ValueError as exc:
            raise ScheduleError(f"bad number: {exc}", lineno) from None
        if name == PULSE:
            if set(params) != {"theta", "dt"}:
                raise ScheduleError("PULSE takes exactly theta=<float> dt=<float>", lineno)
            event_kw = dict(theta=params["theta"], duration=params["dt"])
        elif params:
            raise ScheduleError(f"{name} takes no parameters", lineno)
        else:
            event_kw = {}
        try:
            events.append(ProtocolEvent(time, name, **event_kw))
        except ScheduleError as exc:
            raise ScheduleError(str(exc), lineno) from None
        lines.append(lineno)
    if not events:
        raise ScheduleError("empty schedule")
    _validate(events, lines)
    return ProtocolSchedule(tuple(events), unit)


def fig1_schedule(end: float = 12.0) -> ProtocolSchedule:
    """J0 at tau_D, J2PI at 5 tau_D, J0 at 9 tau_D (times in tauD units)."""
    return ProtocolSchedule.from_events(
        [ProtocolEvent(1.0, J0), ProtocolEvent(5.0, J2PI), ProtocolEvent(9.0, J0)],
        end,
        unit="tauD",
    )


@dataclass(frozen=True)
class RunContext:
    """Mutable-by-replacement run state: the ensemble currently in force."""

    ensemble: EnsembleSpec
    n_inversions: int = 0
    log: tuple[tuple[float, str], ...] = field(default=())


def apply_impulsive_2pi(state: QuantumState) -> QuantumState:
    """Resonant 2pi kick on 2<->3: every excited atom picks up a factor -1."""
    return state.with_amplitudes(state.amplitudes * state.basis.excitation_parity)


def apply_frequency_inversion(ctx: RunContext, time: float | None = None) -> RunContext:
    log = ctx.log if time is None else ctx.log + ((time, INVERT),)
    return RunContext(invert_detunings(ctx.ensemble), ctx.n_inversions + 1, log)


def apply_finite_pulse(
    state: QuantumState,
    ensemble: EnsembleSpec,
    omega0: float,
    duration: float,
    phases=None,
    stepper: StepperConfig | None = None,
) -> QuantumState:
    """Propagate through a rectangular control pulse of area ``omega0 * duration``.

    The cavity coupling and detunings stay on during the pulse.
    """
    if not state.basis.three_level:
        raise ValueError("finite pulses need a three-level basis")
    h = build_hamiltonian(ensemble, state.basis, "minus", control=(omega0, phases))
    return propagate(state, h, duration, stepper)


def impulsive_equivalent(
    state: QuantumState,
    ensemble: EnsembleSpec,
    duration: float,
    stepper: StepperConfig | None = None,
) -> QuantumState:
    """Kick followed by free evolution over the pulse window (impulsive limit)."""
    h = build_hamiltonian(ensemble, state.basis, "minus")
    return propagate(apply_impulsive_2pi(state), h, duration, stepper)


def pulse_mismatch(ensemble: EnsembleSpec, duration: float) -> float:
    """``max_j |D3_j - D2_j| * dt``, the small parameter of the impulsive limit."""
    d2 = np.asarray(ensemble.detunings2)
    d3 = np.asarray(ensemble.detunings3)
    return float(np.max(np.abs(d3 - d2)) * duration)
