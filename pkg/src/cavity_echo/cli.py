"""
Command-line front end.

Subcommands::

    cavity-echo simulate  run a schedule on an ensemble, write a time-series CSV
    cavity-echo oracle    write the closed-form curves in the same CSV layout
    cavity-echo fig1      reproduce the J0 / J2PI / J0 fast-absorption sequence
    cavity-echo sweep     one summary row per inversion delay

Exit codes: 0 ok, 1 numerical-tolerance failure, 2 input error.
"""

from __future__ import annotations

import argparse
import math
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from . import __version__
from .csvio import write_state, write_table, write_timeseries
from .dynamics import StepperConfig, ToleranceError
from .ensemble import (
    EnsembleSpec,
    ValidityWarning,
    comb_coupling_for_gamma,
    decay_rate,
    make_comb,
    make_degenerate,
    sample_random,
    validity_issues,
)
from .oracle import SCENARIOS, scenario_curves, tau_d
from .protocol import (
    J0,
    J2PI,
    ProtocolEvent,
    ProtocolSchedule,
    ScheduleError,
    fig1_schedule,
    parse_protocol,
)
from .state_space import BasisSizeError, fidelity, fock_state
from .timeline import TimeSeries, run_timeline, sector_evolve

EXIT_OK, EXIT_TOLERANCE, EXIT_INPUT = 0, 1, 2

PRESETS = {
    "paper-fig1": dict(n_atoms=400, kind="comb", width=100.0, gamma=1.0),
}


class InputError(ValueError):
    pass


def parse_complex(text: str) -> complex:
    """Parse ``a+bi`` style literals (``i`` or ``j`` as imaginary unit)."""
    s = text.strip().replace(" ", "").replace("i", "j")
    try:
        z = complex(s)
    except ValueError:
        raise InputError(f"bad complex literal {text!r}") from None
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise InputError(f"complex literal {text!r} is not finite")
    return z


def parse_initial(text: str) -> np.ndarray:
    """``fock:<n>`` or ``superposition:<c0>,<c1>,...`` -> normalized Fock amplitudes."""
    kind, _, rest = text.partition(":")
    if kind == "fock":
        try:
            n = int(rest)
        except ValueError:
            raise InputError(f"bad Fock number in {text!r}") from None
        if n < 0:
            raise InputError("Fock number must be >= 0")
        c = np.zeros(n + 1, dtype=complex)
        c[n] = 1.0
        return c
    if kind == "superposition":
        c = np.array([parse_complex(x) for x in rest.split(",") if x.strip()])
        if c.size == 0 or np.linalg.norm(c) == 0:
            raise InputError("superposition needs at least one nonzero amplitude")
        return c / np.linalg.norm(c)
    raise InputError(f"initial state must be fock:<n> or superposition:..., got {text!r}")


@dataclass
class RunConfig:
    n_atoms: int = 400
    kind: str = "comb"
    width: float = 100.0
    coupling: complex | None = None
    gamma: float | None = 1.0
    seed: int | None = None
    initial: str = "fock:1"
    method: str = "auto"
    dt: float | None = None
    tolerance: float = 1e-9
    schedule: str | None = None
    sample_dt: float | None = None
    output: str | None = None

    def resolved(self) -> dict:
        d = asdict(self)
        if d["coupling"] is not None:
            d["coupling"] = [d["coupling"].real, d["coupling"].imag]
        return d


def build_ensemble(cfg: RunConfig) -> EnsembleSpec:
    if cfg.n_atoms < 1:
        raise InputError("n_atoms must be >= 1")
    if cfg.width < 0:
        raise InputError("width must be >= 0")
    if cfg.width == 0:
        g = cfg.coupling if cfg.coupling is not None else comb_coupling_for_gamma(400, 100.0, 1.0)
        return make_degenerate(cfg.n_atoms, g)
    if cfg.kind == "comb":
        g = cfg.coupling
        if g is None:
            g = comb_coupling_for_gamma(cfg.n_atoms, cfg.width, cfg.gamma or 1.0)
        return make_comb(cfg.n_atoms, cfg.width, g)
    if cfg.kind in ("gaussian", "lorentzian"):
        if cfg.seed is None:
            raise InputError(f"--seed is required for {cfg.kind} ensembles")
        g = cfg.coupling
        if g is None:
            g0 = (
                1 / (cfg.width * math.sqrt(2 * math.pi))
                if cfg.kind == "gaussian"
                else 1 / (math.pi * cfg.width)
            )
            g = math.sqrt((cfg.gamma or 1.0) / (math.pi * cfg.n_atoms * g0))
        return sample_random(cfg.n_atoms, cfg.kind, cfg.width, g, cfg.seed)
    raise InputError(f"unknown distribution kind {cfg.kind!r}")


def _gamma_or_reference(ensemble: EnsembleSpec, issues: list[str]) -> float:
    gamma = decay_rate(ensemble)
    if not math.isfinite(gamma):
        issues.append("tauD units resolved against the reference gamma = 1")
        return 1.0
    return gamma


def _header(command: str, cfg: RunConfig, gamma: float, **extra) -> dict:
    return {
        "tool": "cavity-echo",
        "version": __version__,
        "command": command,
        "config": cfg.resolved(),
        "gamma": gamma,
        "tau_D": tau_d(gamma) if gamma > 0 and math.isfinite(gamma) else None,
        **extra,
    }


class _Reporter:
    def __init__(self, csv_to_stdout: bool):
        self.stream = sys.stderr if csv_to_stdout else sys.stdout

    def __call__(self, msg: str = "") -> None:
        print(msg, file=self.stream)


def _stepper(cfg: RunConfig) -> StepperConfig:
    return StepperConfig(cfg.method, cfg.dt, cfg.tolerance)


def _run(cfg, ensemble, schedule, field_amps, sample_dt, checkpoints):
    """Single-sector fast path for Fock inputs, sector decomposition otherwise."""
    nonzero = np.nonzero(field_amps)[0]
    three = schedule.has_pulses
    if len(nonzero) == 1:
        n = int(nonzero[0])
        init = fock_state(ensemble.n_atoms, n, three)
        series = run_timeline(init, ensemble, schedule, sample_dt, _stepper(cfg), checkpoints)
        return init, series
    res = sector_evolve(
        field_amps, ensemble, schedule, sample_dt=sample_dt, stepper=_stepper(cfg),
        three_level=three, checkpoints=checkpoints,
    )
    return res.initial_state, res.series


def cmd_simulate(args) -> int:
    cfg = _config_from_args(args)
    ensemble = build_ensemble(cfg)
    issues = validity_issues(ensemble)
    gamma = _gamma_or_reference(ensemble, issues)
    field_amps = parse_initial(cfg.initial)
    if cfg.schedule:
        try:
            with open(cfg.schedule, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise InputError(f"cannot read schedule: {exc}") from None
        schedule = parse_protocol(text)
    else:
        if args.t_end is None:
            raise InputError("give --schedule or --t-end")
        schedule = ProtocolSchedule.from_events([], args.t_end)
    schedule = schedule.resolve(gamma)
    sample_dt = cfg.sample_dt or schedule.end_time / 400
    checkpoints = sorted(
        set(args.checkpoint or []) | {e.end_time for e in schedule.controls} | {schedule.end_time}
    )
    initial, series = _run(cfg, ensemble, schedule, field_amps, sample_dt, checkpoints)
    fids = {tc: fidelity(initial, st) for tc, st in sorted(series.snapshots.items())}

    header = _header("simulate", cfg, gamma, validity=issues,
                     schedule=[[e.time, e.kind] for e in schedule.events])
    write_timeseries(cfg.output, header, series)
    if args.final_state:
        write_state(args.final_state, header, series.final_state)
    say = _Reporter(cfg.output in (None, "-"))
    say(f"gamma = {gamma:.12g}")
    say(f"tau_D = {tau_d(gamma):.12g}")
    for msg in issues:
        say(f"warning: {msg}")
    for tc, f in fids.items():
        say(f"fidelity with initial state at t = {tc:.12g}: {f:.12g}")
    return EXIT_OK


def cmd_oracle(args) -> int:
    if not args.gamma > 0:
        raise InputError("gamma must be positive")
    if args.scenario not in SCENARIOS:
        raise InputError(f"unknown scenario {args.scenario!r}")
    td = tau_d(args.gamma)
    t_end = args.t_end if args.t_end is not None else 3 * td
    sample_dt = args.sample_dt or t_end / 400
    n = max(1, math.ceil(t_end / sample_dt - 1e-9))
    t = np.linspace(0.0, t_end, n + 1)
    tau = args.tau
    if args.scenario == "j0" and tau is None:
        raise InputError("scenario j0 needs --tau")
    c, p = scenario_curves(args.scenario, t, args.gamma, tau)
    cols = {
        "t": t,
        "re_cph": c,
        "im_cph": np.zeros_like(t),
        "abs2_cph": c**2,
        "p_atoms": p,
        "norm": c**2 + p,
    }
    header = {
        "tool": "cavity-echo", "version": __version__, "command": "oracle",
        "config": {"gamma": args.gamma, "scenario": args.scenario, "tau": tau,
                   "t_end": t_end, "sample_dt": sample_dt},
        "gamma": args.gamma, "tau_D": td,
    }
    write_table(args.output, header, cols)
    return EXIT_OK


@dataclass
class Fig1Report:
    gamma: float
    tau_d: float
    max_field_absorbed: float
    cph_at_10: complex
    fidelity_at_10: float
    emission_window: tuple[float, float] | None
    caption_window_matched: bool

    @property
    def passed(self) -> bool:
        return self.max_field_absorbed <= 0.02 and abs(self.cph_at_10) >= 0.98


def emission_activity(series: TimeSeries, start: float, stop: float, rate: float) -> np.ndarray:
    """Sample times in (start, stop] where |c_ph|^2 grows faster than ``rate``."""
    a2 = series.abs2_cph
    dt = np.diff(series.t)
    growth = np.divide(np.diff(a2), dt, out=np.zeros_like(dt), where=dt > 0)
    mid = series.t[1:]
    sel = (mid > start) & (mid <= stop) & (growth > rate)
    return mid[sel]


def fig1_report(series: TimeSeries, gamma: float, initial) -> Fig1Report:
    td = tau_d(gamma)
    t = series.t
    absorbed = (t > 2 * td * (1 + 1e-9)) & (t < 5 * td)
    k10 = series.at(10 * td)
    snap = series.snapshots.get(10 * td)
    fid = float("nan") if snap is None else fidelity(initial, snap)
    active = emission_activity(series, 5 * td, 10 * td, rate=0.1 * gamma)
    window = None if active.size == 0 else (float(active.min() / td), float(active.max() / td))
    step = float(np.max(np.diff(t))) / td
    matched = window is not None and window[0] >= 6 - step and window[1] <= 8 + step
    return Fig1Report(
        gamma, td, float(np.abs(series.cph[absorbed]).max()), complex(series.cph[k10]),
        fid, window, matched,
    )


def cmd_fig1(args) -> int:
    cfg = _config_from_args(args)
    ensemble = build_ensemble(cfg)
    issues = validity_issues(ensemble)
    gamma = _gamma_or_reference(ensemble, issues)
    td = tau_d(gamma)
    schedule = fig1_schedule(end=args.end).resolve(gamma)
    sample_dt = cfg.sample_dt or td / 50
    init = fock_state(ensemble.n_atoms, 1)
    series = run_timeline(init, ensemble, schedule, sample_dt, _stepper(cfg), [10 * td])
    report = fig1_report(series, gamma, init)

    header = _header("fig1", cfg, gamma, validity=issues)
    write_timeseries(cfg.output, header, series)
    say = _Reporter(cfg.output in (None, "-"))
    say(f"gamma = {gamma:.12g}, tau_D = {td:.12g}")
    for msg in issues:
        say(f"warning: {msg}")
    say(f"max |c_ph| on (2, 5) tau_D: {report.max_field_absorbed:.6g} (<= 0.02)")
    say(f"|c_ph(10 tau_D)| = {abs(report.cph_at_10):.6g} (>= 0.98), "
        f"fidelity = {report.fidelity_at_10:.12g}")
    if report.emission_window:
        lo, hi = report.emission_window
        say(f"observed emission activity: ({lo:.3g}, {hi:.3g}] tau_D; "
            f"caption window (6, 8] tau_D {'matched' if report.caption_window_matched else 'not matched'}")
    else:
        say("no emission activity observed after the J2PI event")
    return EXIT_OK if report.passed else EXIT_TOLERANCE


def _sweep_point(ensemble, protocol, tau, stepper):
    schedule = ProtocolSchedule.from_events([ProtocolEvent(tau, protocol)], 2 * tau)
    init = fock_state(ensemble.n_atoms, 1)
    series = run_timeline(init, ensemble, schedule, 2 * tau, stepper, [2 * tau])
    c = complex(series.cph[-1])
    return c, float(series.p_atoms[-1]), fidelity(init, series.snapshots[2 * tau])


def cmd_sweep(args) -> int:
    cfg = _config_from_args(args)
    ensemble = build_ensemble(cfg)
    issues = validity_issues(ensemble)
    gamma = decay_rate(ensemble)
    if not math.isfinite(gamma):
        raise InputError("sweeps need a broadened ensemble")
    if args.gamma_tau:
        values = [float(x) for x in args.gamma_tau.split(",") if x.strip()]
        taus = [v / gamma for v in values]
    elif args.tau:
        taus = [float(x) for x in args.tau.split(",") if x.strip()]
        values = taus
    else:
        raise InputError("give --gamma-tau or --tau")
    if not values or any(t <= 0 for t in taus):
        raise InputError("sweep axis must be non-empty with positive delays")
    protocol = {"j0": J0, "j2pi": J2PI}[args.protocol.lower()]
    stepper = _stepper(cfg)
    with ThreadPoolExecutor(max_workers=max(1, args.jobs)) as pool:
        results = list(pool.map(lambda tau: _sweep_point(ensemble, protocol, tau, stepper), taus))
    cph = np.array([r[0] for r in results])
    cols = {
        "gamma_tau" if args.gamma_tau else "tau": np.array(values),
        "echo_amplitude": cph.real,
        "echo_imag": cph.imag,
        "echo_abs": np.abs(cph),
        "echo_phase": np.angle(cph),
        "p_atoms": np.array([r[1] for r in results]),
        "fidelity": np.array([r[2] for r in results]),
    }
    header = _header("sweep", cfg, gamma, validity=issues, protocol=protocol)
    write_table(cfg.output, header, cols)
    say = _Reporter(cfg.output in (None, "-"))
    for msg in issues:
        say(f"warning: {msg}")
    say(f"{len(values)} sweep points, gamma = {gamma:.12g}")
    return EXIT_OK


def _config_from_args(args) -> RunConfig:
    preset = PRESETS[args.preset]
    cfg = RunConfig(**preset)
    for name in ("n_atoms", "kind", "width", "gamma", "seed"):
        v = getattr(args, name, None)
        if v is not None:
            setattr(cfg, name, v)
    if getattr(args, "coupling", None) is not None:
        cfg.coupling = parse_complex(args.coupling)
    for name in ("initial", "method", "dt", "tolerance", "schedule", "sample_dt", "output"):
        v = getattr(args, name, None)
        if v is not None:
            setattr(cfg, name, v)
    return cfg


def _ensemble_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("ensemble")
    g.add_argument("--preset", choices=sorted(PRESETS), default="paper-fig1",
                   help="starting values (comb, N=400, W=100, gamma=1)")
    g.add_argument("--n-atoms", type=int)
    g.add_argument("--kind", choices=["comb", "gaussian", "lorentzian"])
    g.add_argument("--width", type=float, help="comb total width, gaussian sigma or lorentzian HWHM")
    g.add_argument("--coupling", help="uniform coupling g (complex literal); overrides --gamma")
    g.add_argument("--gamma", type=float, help="target decay rate used to pick g")
    g.add_argument("--seed", type=int)


def _stepper_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("stepper")
    g.add_argument("--method", choices=["auto", "expm_eig", "rk4"])
    g.add_argument("--dt", type=float, help="maximum rk4 step")
    g.add_argument("--tolerance", type=float, help="norm drift bound per unit time")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cavity-echo", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a schedule and write a time series")
    _ensemble_args(p)
    _stepper_args(p)
    p.add_argument("--initial", help="fock:<n> or superposition:<c0>,<c1>,... (default fock:1)")
    p.add_argument("--schedule", help="schedule file")
    p.add_argument("--t-end", type=float, help="free evolution end time when no schedule is given")
    p.add_argument("--sample-dt", type=float)
    p.add_argument("--checkpoint", type=float, action="append",
                   help="extra time at which to report fidelity (repeatable)")
    p.add_argument("--output", "-o", help="CSV path (default stdout)")
    p.add_argument("--final-state", help="write the final state to this CSV file")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("oracle", help="closed-form curves as CSV")
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--scenario", required=True, choices=SCENARIOS)
    p.add_argument("--tau", type=float)
    p.add_argument("--t-end", type=float)
    p.add_argument("--sample-dt", type=float)
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("fig1", help="J0(tau_D), J2PI(5 tau_D), J0(9 tau_D) on |1>")
    _ensemble_args(p)
    _stepper_args(p)
    p.add_argument("--sample-dt", type=float)
    p.add_argument("--end", type=float, default=12.0, help="end time in tau_D units")
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_fig1)

    p = sub.add_parser("sweep", help="echo summary for a list of inversion delays")
    _ensemble_args(p)
    _stepper_args(p)
    p.add_argument("--protocol", choices=["J0", "J2PI", "j0", "j2pi"], default="J0")
    axis = p.add_mutually_exclusive_group(required=True)
    axis.add_argument("--gamma-tau", help="comma-separated gamma*tau values")
    axis.add_argument("--tau", help="comma-separated absolute delays")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ValidityWarning)
            return args.func(args)
    except ToleranceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_TOLERANCE
    except (ScheduleError, InputError, BasisSizeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
