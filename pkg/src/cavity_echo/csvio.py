"""CSV emission for time series and state files.

Every file starts with ``# header-json:<json>`` followed by a column-name row.
Numbers are written as lower-case scientific with 12 significant digits.
"""

from __future__ import annotations

import io
import json
import sys
from contextlib import contextmanager
from pathlib import Path

import numpy as np

from .state_space import (
    BasisState,
    QuantumState,
    SectorState,
    enumerate_basis,
)

HEADER_PREFIX = "# header-json:"
FLOAT_FMT = "{:.11e}"


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    if isinstance(x, str):
        return x
    return FLOAT_FMT.format(float(x))


@contextmanager
def _open_out(target):
    if target is None or target == "-":
        yield sys.stdout
    elif isinstance(target, io.TextIOBase):
        yield target
    else:
        with open(target, "w", encoding="utf-8", newline="\n") as fh:
            yield fh


def write_table(target, header: dict, columns: dict[str, np.ndarray]) -> None:
    names = list(columns)
    data = [np.asarray(columns[n]) for n in names]
    with _open_out(target) as fh:
        fh.write(HEADER_PREFIX + json.dumps(header, sort_keys=True) + "\n")
        fh.write(",".join(names) + "\n")
        for row in zip(*data):
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def read_table(path) -> tuple[dict, dict[str, np.ndarray]]:
    text = Path(path).read_text(encoding="utf-8").splitlines()
    if not text or not text[0].startswith(HEADER_PREFIX):
        raise ValueError(f"{path}: missing header line")
    header = json.loads(text[0][len(HEADER_PREFIX):])
    names = text[1].split(",")
    rows = [line.split(",") for line in text[2:] if line]
    cols = {}
    for k, name in enumerate(names):
        vals = [r[k] for r in rows]
        try:
            cols[name] = np.array([float(v) for v in vals])
        except ValueError:
            cols[name] = np.array(vals, dtype=object)
    return header, cols


def write_timeseries(target, header: dict, series) -> None:
    write_table(target, header, series.columns())


def _excited_label(state: BasisState) -> str:
    return ";".join(f"{a}@{lv}" for a, lv in state.excited_atoms) or "-"


def _parse_excited(label: str) -> tuple[tuple[int, int], ...]:
    if label == "-":
        return ()
    out = []
    for item in label.split(";"):
        a, lv = item.split("@")
        out.append((int(a), int(lv)))
    return tuple(out)


def write_state(target, header: dict, state: QuantumState | SectorState) -> None:
    """Write nonzero amplitudes as ``sector,photon_count,excited,re,im`` rows."""
    comps = state.components if isinstance(state, SectorState) else (state,)
    first = comps[0].basis
    header = dict(header)
    header["state"] = {
        "n_atoms": first.n_atoms,
        "three_level": first.three_level,
        "sectors": [c.basis.n_exc for c in comps],
        "direct_sum": isinstance(state, SectorState),
    }
    cols: dict[str, list] = {k: [] for k in ("sector", "photon_count", "excited", "re", "im")}
    for c in comps:
        for bs, amp in zip(c.basis.states, c.amplitudes):
            if amp == 0:
                continue
            cols["sector"].append(c.basis.n_exc)
            cols["photon_count"].append(bs.photon_count)
            cols["excited"].append(_excited_label(bs))
            cols["re"].append(amp.real)
            cols["im"].append(amp.imag)
    write_table(target, header, {k: np.array(v, dtype=object) for k, v in cols.items()})


def read_state(path) -> QuantumState | SectorState:
    header, cols = read_table(path)
    meta = header["state"]
    comps = []
    sectors = np.asarray(cols.get("sector", []), dtype=float).astype(int)
    for n in meta["sectors"]:
        basis = enumerate_basis(meta["n_atoms"], n, meta["three_level"])
        amps = np.zeros(basis.dimension, dtype=complex)
        for k in np.nonzero(sectors == n)[0]:
            bs = BasisState(int(cols["photon_count"][k]), _parse_excited(str(cols["excited"][k])))
            amps[basis.index(bs)] = complex(float(cols["re"][k]), float(cols["im"][k]))
        comps.append(QuantumState(basis, amps))
    if meta["direct_sum"]:
        return SectorState(tuple(comps))
    return comps[0]
