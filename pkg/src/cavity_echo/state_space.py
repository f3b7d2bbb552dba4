"""
Excitation-number sectors, Hamiltonian assembly and observables.

The interaction-picture Hamiltonian conserves the total excitation number
``a^+ a + sum_j (P22 + P33)``, so every simulation lives in a single sector
(or a direct sum of independent sectors). A sector basis state is labelled by
the photon count plus the sorted list of excited atoms and their level.

Conventions
-----------
- hbar = 1, all energies are angular frequencies.
- Atomic level 1 is the ground state, 2 couples to the cavity, 3 is the
  auxiliary level addressed by the control pulse.
- Basis ordering: photon count descending, then the excited-atom tuple in
  lexicographic order. For the two-level single-excitation sector this gives
  ``[|1; g>, |0; atom 0>, |0; atom 1>, ...]``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np
import scipy.linalg
import scipy.sparse as sp

DEFAULT_BASIS_CAP = 2_000_000

LEVEL_COUPLED = 2
LEVEL_AUX = 3


class BasisSizeError(ValueError):
    """Raised when a sector would exceed the configured dimension cap."""


class SectorMismatchError(ValueError):
    """Raised when an observable is requested on an incompatible state."""


@dataclass(frozen=True, order=True)
class BasisState:
    photon_count: int
    excited_atoms: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        if self.photon_count < 0:
            raise ValueError("photon_count must be non-negative")
        idx = [a for a, _ in self.excited_atoms]
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise ValueError("excited atom indices must be strictly increasing")
        if any(lvl not in (LEVEL_COUPLED, LEVEL_AUX) for _, lvl in self.excited_atoms):
            raise ValueError("excited levels must be 2 or 3")

    @property
    def n_excitations(self) -> int:
        return self.photon_count + len(self.excited_atoms)

    def label(self) -> str:
        atoms = " ".join(f"{a}@{lvl}" for a, lvl in self.excited_atoms)
        return f"|{self.photon_count}; {atoms or '-'}>"


def _sector_dimension(n_atoms: int, n_exc: int, three_level: bool) -> int:
    mult = 2 if three_level else 1
    return sum(
        math.comb(n_atoms, k) * mult**k for k in range(0, min(n_exc, n_atoms) + 1)
    )


@dataclass(frozen=True, eq=False)
class BasisIndex:
    """Canonically ordered basis of one excitation-number sector."""

    n_atoms: int
    n_exc: int
    three_level: bool
    states: tuple[BasisState, ...]

    @cached_property
    def lookup(self) -> dict[BasisState, int]:
        return {s: i for i, s in enumerate(self.states)}

    @property
    def dimension(self) -> int:
        return len(self.states)

    def __len__(self) -> int:
        return len(self.states)

    def index(self, state: BasisState) -> int:
        return self.lookup[state]

    @cached_property
    def photon_counts(self) -> np.ndarray:
        return np.array([s.photon_count for s in self.states], dtype=int)

    @cached_property
    def atoms_excited_mask(self) -> np.ndarray:
        return np.array([bool(s.excited_atoms) for s in self.states])

    @cached_property
    def excitation_parity(self) -> np.ndarray:
        """(-1)**(number of atoms in level 2 or 3) for every basis state."""
        n = np.array([len(s.excited_atoms) for s in self.states])
        return np.where(n % 2 == 0, 1.0, -1.0)

    def same_space(self, other: "BasisIndex") -> bool:
        return (
            self is other
            or (
                self.n_atoms == other.n_atoms
                and self.n_exc == other.n_exc
                and self.three_level == other.three_level
            )
        )


def enumerate_basis(
    n_atoms: int,
    n_exc: int,
    three_level: bool = False,
    max_dimension: int = DEFAULT_BASIS_CAP,
) -> BasisIndex:
    """Enumerate all basis states with ``photons + excited atoms == n_exc``.

    Raises
    ------
    BasisSizeError
        If the sector dimension exceeds ``max_dimension``.
    """
    if n_atoms < 1:
        raise ValueError("n_atoms must be >= 1")
    if n_exc < 0:
        raise ValueError("n_exc must be >= 0")
    dim = _sector_dimension(n_atoms, n_exc, three_level)
    if dim > max_dimension:
        raise BasisSizeError(
            f"sector (N={n_atoms}, n_exc={n_exc}, three_level={three_level}) has "
            f"dimension {dim} > cap {max_dimension}"
        )
    levels = (LEVEL_COUPLED, LEVEL_AUX) if three_level else (LEVEL_COUPLED,)
    states = []
    for photons in range(n_exc, -1, -1):
        k = n_exc - photons
        if k > n_atoms:
            continue
        block = []
        for atoms in itertools.combinations(range(n_atoms), k):
            for lv in itertools.product(levels, repeat=k):
                block.append(BasisState(photons, tuple(zip(atoms, lv))))
        block.sort()
        states.extend(block)
    return BasisIndex(n_atoms, n_exc, three_level, tuple(states))


@dataclass(frozen=True, eq=False)
class HamiltonianMatrix:
    """Hermitian matrix stored as a real diagonal plus upper-triangle entries.

    Each entry ``(row, col, value)`` implies its conjugate partner
    ``(col, row, conj(value))``.
    """

    dimension: int
    diagonal: np.ndarray
    rows: np.ndarray
    cols: np.ndarray
    values: np.ndarray
    hermitian: bool = True

    def __post_init__(self):
        for arr in (self.diagonal, self.rows, self.cols, self.values):
            arr.setflags(write=False)

    @property
    def off_diagonal(self) -> list[tuple[int, int, complex]]:
        return list(zip(self.rows.tolist(), self.cols.tolist(), self.values.tolist()))

    @cached_property
    def sparse(self) -> sp.csr_matrix:
        r = np.concatenate([np.arange(self.dimension), self.rows, self.cols])
        c = np.concatenate([np.arange(self.dimension), self.cols, self.rows])
        v = np.concatenate(
            [self.diagonal.astype(complex), self.values, np.conj(self.values)]
        )
        return sp.csr_matrix((v, (r, c)), shape=(self.dimension, self.dimension))

    def to_dense(self) -> np.ndarray:
        return self.sparse.toarray()

    @cached_property
    def norm_bound(self) -> float:
        """Gershgorin bound on the spectral radius."""
        return float(abs(self.sparse).sum(axis=1).max()) if self.dimension else 0.0

    @cached_property
    def eig(self) -> tuple[np.ndarray, np.ndarray]:
        # MRRR driver: noticeably faster than the default for dense spectra
        return scipy.linalg.eigh(self.to_dense(), driver="evr")

    def apply(self, vec: np.ndarray) -> np.ndarray:
        return self.sparse @ vec

    def negated(self) -> "HamiltonianMatrix":
        return HamiltonianMatrix(
            self.dimension, -self.diagonal, self.rows.copy(), self.cols.copy(), -self.values
        )


def build_hamiltonian(
    ensemble,
    basis: BasisIndex,
    coupling_sign: str = "minus",
    control: tuple[float, Sequence[float] | None] | None = None,
) -> HamiltonianMatrix:
    """Assemble ``sum_j [V(-/+)^j + D3_j P33^j - Omega/2 (e^{-i phi} P32 + h.c.)]``.

    Parameters
    ----------
    ensemble : EnsembleSpec
        Supplies couplings ``g_j`` and detunings ``D2_j``, ``D3_j``.
    basis : BasisIndex
        Sector to represent the operator in.
    coupling_sign : {"minus", "plus"}
        Sign in front of the Jaynes-Cummings exchange term.
    control : (Omega0, phases) or None
        Constant Rabi frequency of the 2<->3 control field and per-atom
        phases (``None`` means all zero). Requires a three-level basis.
    """
    if basis.n_atoms != ensemble.n_atoms:
        raise ValueError(
            f"basis built for {basis.n_atoms} atoms, ensemble has {ensemble.n_atoms}"
        )
    if coupling_sign not in ("minus", "plus"):
        raise ValueError("coupling_sign must be 'minus' or 'plus'")
    if control is not None and not basis.three_level:
        raise ValueError("a control field needs a three-level basis")
    sign = -1.0 if coupling_sign == "minus" else 1.0
    g = np.asarray(ensemble.couplings, dtype=complex)
    d2 = np.asarray(ensemble.detunings2, dtype=float)
    d3 = np.asarray(ensemble.detunings3, dtype=float)
    lookup = basis.lookup

    diag = np.empty(basis.dimension)
    rows: list[int] = []
    cols: list[int] = []
    vals: list[complex] = []
    if control is not None:
        omega0, phases = control
        phases = np.zeros(basis.n_atoms) if phases is None else np.asarray(phases, float)
        if phases.shape != (basis.n_atoms,):
            raise ValueError("need one control phase per atom")
        ctrl = -0.5 * omega0 * np.exp(-1j * phases)

    for i, s in enumerate(basis.states):
        excited = dict(s.excited_atoms)
        diag[i] = sum(d2[a] if lv == LEVEL_COUPLED else d3[a] for a, lv in s.excited_atoms)
        if s.photon_count > 0:
            amp = sign * math.sqrt(s.photon_count)
            for j in range(basis.n_atoms):
                if j in excited:
                    continue
                target = BasisState(
                    s.photon_count - 1, tuple(sorted((*s.excited_atoms, (j, LEVEL_COUPLED))))
                )
                rows.append(lookup[target])
                cols.append(i)
                vals.append(amp * g[j])
        if control is not None:
            for pos, (j, lv) in enumerate(s.excited_atoms):
                if lv != LEVEL_COUPLED:
                    continue
                new = list(s.excited_atoms)
                new[pos] = (j, LEVEL_AUX)
                rows.append(lookup[BasisState(s.photon_count, tuple(new))])
                cols.append(i)
                vals.append(ctrl[j])
    return HamiltonianMatrix(
        basis.dimension,
        diag,
        np.asarray(rows, dtype=int),
        np.asarray(cols, dtype=int),
        np.asarray(vals, dtype=complex),
    )


@dataclass(frozen=True, eq=False)
class QuantumState:
    """Amplitudes over one sector basis. Operations return new states."""

    basis: BasisIndex
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex)
        if amps.shape != (self.basis.dimension,):
            raise ValueError(
                f"expected {self.basis.dimension} amplitudes, got shape {amps.shape}"
            )
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self) -> "QuantumState":
        n = self.norm()
        if n == 0:
            raise ValueError("cannot normalize the zero vector")
        return QuantumState(self.basis, self.amplitudes / n)

    def with_amplitudes(self, amplitudes: np.ndarray) -> "QuantumState":
        return QuantumState(self.basis, amplitudes)

    def scaled(self, factor: complex) -> "QuantumState":
        return QuantumState(self.basis, self.amplitudes * factor)

    def amplitude(self, state: BasisState) -> complex:
        i = self.basis.lookup.get(state)
        return 0j if i is None else complex(self.amplitudes[i])

    def inner(self, other: "QuantumState") -> complex:
        """<self|other>."""
        _check_same_space(self.basis, other.basis)
        return complex(np.vdot(self.amplitudes, other.amplitudes))


@dataclass(frozen=True, eq=False)
class SectorState:
    """Direct sum of unnormalized per-sector components, one per excitation number."""

    components: tuple[QuantumState, ...]

    def __post_init__(self):
        sectors = [c.basis.n_exc for c in self.components]
        if len(set(sectors)) != len(sectors):
            raise ValueError("duplicate excitation sector")

    def sector(self, n_exc: int) -> QuantumState | None:
        for c in self.components:
            if c.basis.n_exc == n_exc:
                return c
        return None

    def norm(self) -> float:
        return math.sqrt(sum(c.norm() ** 2 for c in self.components))

    def inner(self, other: "SectorState") -> complex:
        total = 0j
        for c in self.components:
            o = other.sector(c.basis.n_exc)
            if o is not None:
                total += c.inner(o)
        return total


def _check_same_space(a: BasisIndex, b: BasisIndex) -> None:
    if not a.same_space(b):
        raise SectorMismatchError(
            f"basis mismatch: (N={a.n_atoms}, n_exc={a.n_exc}, 3lvl={a.three_level}) vs "
            f"(N={b.n_atoms}, n_exc={b.n_exc}, 3lvl={b.three_level})"
        )


def fock_state(n_atoms: int, photons: int, three_level: bool = False, **kw) -> QuantumState:
    """``|photons> (x) |all atoms in ground>`` in its own sector."""
    basis = enumerate_basis(n_atoms, photons, three_level, **kw)
    amps = np.zeros(basis.dimension, dtype=complex)
    amps[basis.index(BasisState(photons))] = 1.0
    return QuantumState(basis, amps)


def field_state(
    n_atoms: int, field_amplitudes: Iterable[complex], three_level: bool = False
) -> SectorState:
    """``sum_n C_n |n> (x) |g>`` as a direct sum of sectors (zero weights skipped)."""
    comps = []
    for n, c in enumerate(field_amplitudes):
        if c != 0:
            comps.append(fock_state(n_atoms, n, three_level).scaled(complex(c)))
    return SectorState(tuple(comps))


def photon_amplitude(state: QuantumState) -> complex:
    """Amplitude of ``|1> (x) |g>`` in the single-excitation sector."""
    if state.basis.n_exc != 1:
        raise SectorMismatchError(
            f"photon amplitude is defined in the n_exc=1 sector, got {state.basis.n_exc}"
        )
    return state.amplitude(BasisState(1))


def atomic_excitation_probability(state: QuantumState | SectorState) -> float:
    """Probability that at least one atom is out of the ground state."""
    if isinstance(state, SectorState):
        return float(sum(atomic_excitation_probability(c) for c in state.components))
    mask = state.basis.atoms_excited_mask
    return float(np.sum(np.abs(state.amplitudes[mask]) ** 2))


def fidelity(a: QuantumState | SectorState, b: QuantumState | SectorState) -> float:
    """``|<a|b>|**2``."""
    if isinstance(a, SectorState) != isinstance(b, SectorState):
        raise SectorMismatchError("cannot compare a sector state with a single-sector state")
    return abs(a.inner(b)) ** 2


def photon_number_distribution(
    state: QuantumState | SectorState,
) -> dict[int, float]:
    """Marginal distribution of the photon count."""
    comps = state.components if isinstance(state, SectorState) else (state,)
    dist: dict[int, float] = {}
    for c in comps:
        probs = np.abs(c.amplitudes) ** 2
        counts = c.basis.photon_counts
        for n in np.unique(counts):
            dist[int(n)] = dist.get(int(n), 0.0) + float(probs[counts == n].sum())
    return dict(sorted(dist.items()))
