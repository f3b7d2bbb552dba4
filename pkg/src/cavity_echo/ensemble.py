"""Inhomogeneously broadened atomic ensembles and their collective decay rate."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np

KINDS = ("comb", "gaussian", "lorentzian", "degenerate")

# gamma / width above this is reported as leaving the weak-coupling regime
MARKOV_RATIO_LIMIT = 0.1


class ValidityWarning(UserWarning):
    """Parameters fall outside the regime where the closed forms apply."""


@dataclass(frozen=True)
class DistributionMeta:
    kind: str
    width: float
    G2_at_zero: float
    seed: int | None = None


@dataclass(frozen=True)
class EnsembleSpec:
    """N atoms with couplings ``g_j`` and detunings of levels 2 and 3.

    Detunings are angular frequencies relative to the cavity mode (level 2)
    and to the control carrier (level 3).
    """

    n_atoms: int
    couplings: tuple[complex, ...]
    detunings2: tuple[float, ...]
    detunings3: tuple[float, ...]
    meta: DistributionMeta

    def __post_init__(self):
        n = self.n_atoms
        if n < 1:
            raise ValueError("n_atoms must be >= 1")
        for name in ("couplings", "detunings2", "detunings3"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"{name} must have length {n}")
        if self.meta.kind not in KINDS:
            raise ValueError(f"unknown distribution kind {self.meta.kind!r}")
        if not self.meta.G2_at_zero > 0:
            raise ValueError("G2_at_zero must be positive")

    @property
    def rms_coupling_sq(self) -> float:
        """``|g_Sigma|^2 = (1/N) sum_j |g_j|^2``."""
        return float(np.mean(np.abs(np.asarray(self.couplings)) ** 2))

    @property
    def is_inverted_symmetric(self) -> bool:
        d = np.sort(np.asarray(self.detunings2))
        return bool(np.allclose(d, -d[::-1]))


def make_comb(
    n_atoms: int,
    total_width: float,
    coupling: complex,
    width3: float | None = None,
) -> EnsembleSpec:
    """Midpoint frequency comb ``D_j = -W/2 + (j + 1/2) W/N`` with uniform coupling.

    Level-3 detunings are the same comb rescaled to ``width3`` (defaults to
    ``W``, i.e. fully correlated broadenings).
    """
    if n_atoms < 2:
        raise ValueError("a comb needs at least 2 atoms")
    if not total_width > 0:
        raise ValueError("total_width must be positive")
    w3 = total_width if width3 is None else width3
    j = np.arange(n_atoms)
    # integer numerators keep the comb exactly mirror-symmetric
    d2 = (2 * j + 1 - n_atoms) * (total_width / (2 * n_atoms))
    d3 = d2 * (w3 / total_width)
    return EnsembleSpec(
        n_atoms,
        (complex(coupling),) * n_atoms,
        tuple(d2.tolist()),
        tuple(d3.tolist()),
        DistributionMeta("comb", float(total_width), 1.0 / total_width),
    )


def comb_coupling_for_gamma(n_atoms: int, total_width: float, gamma: float) -> float:
    """Uniform coupling giving decay rate ``gamma`` on a comb: ``sqrt(gamma W / (pi N))``."""
    return math.sqrt(gamma * total_width / (math.pi * n_atoms))


def reference_ensemble(n_atoms: int = 400, total_width: float = 100.0, gamma: float = 1.0):
    """Comb preset used for the figure reproduction (N=400, W=100, gamma=1)."""
    return make_comb(n_atoms, total_width, comb_coupling_for_gamma(n_atoms, total_width, gamma))


def make_degenerate(n_atoms: int, coupling: complex) -> EnsembleSpec:
    """All atoms on resonance: no inhomogeneous broadening, gamma is undefined (inf)."""
    return EnsembleSpec(
        n_atoms,
        (complex(coupling),) * n_atoms,
        (0.0,) * n_atoms,
        (0.0,) * n_atoms,
        DistributionMeta("degenerate", 0.0, math.inf),
    )


def sample_random(
    n_atoms: int,
    kind: str,
    width: float,
    coupling: complex,
    seed: int,
) -> EnsembleSpec:
    """Random detunings drawn from a normalized Gaussian (std ``width``) or
    Lorentzian (HWHM ``width``) with a seeded ``numpy.random.Generator``."""
    if seed is None:
        raise ValueError("a seed is required")
    if not width > 0:
        raise ValueError("width must be positive")
    rng = np.random.default_rng(seed)
    if kind == "gaussian":
        d2 = rng.normal(0.0, width, n_atoms)
        g0 = 1.0 / (width * math.sqrt(2 * math.pi))
    elif kind == "lorentzian":
        d2 = width * rng.standard_cauchy(n_atoms)
        g0 = 1.0 / (math.pi * width)
    else:
        raise ValueError(f"unknown random distribution kind {kind!r}")
    return EnsembleSpec(
        n_atoms,
        (complex(coupling),) * n_atoms,
        tuple(d2.tolist()),
        tuple(d2.tolist()),
        DistributionMeta(kind, float(width), g0, seed),
    )


def decay_rate(ensemble: EnsembleSpec) -> float:
    """Collective absorption rate ``gamma = pi N |g_Sigma|^2 G2(0)``."""
    return math.pi * ensemble.n_atoms * ensemble.rms_coupling_sq * ensemble.meta.G2_at_zero


def invert_detunings(ensemble: EnsembleSpec) -> EnsembleSpec:
    """Flip the sign of every level-2 detuning; couplings and level 3 untouched."""
    return replace(ensemble, detunings2=tuple(-d for d in ensemble.detunings2))


def recurrence_time(ensemble: EnsembleSpec) -> float:
    """Revival period ``2 pi N / W`` of an equidistant comb (inf otherwise)."""
    if ensemble.meta.kind != "comb":
        return math.inf
    return 2 * math.pi * ensemble.n_atoms / ensemble.meta.width


def validity_issues(ensemble: EnsembleSpec) -> list[str]:
    issues = []
    width = ensemble.meta.width
    if width <= 0 or ensemble.meta.kind == "degenerate":
        issues.append(
            "no inhomogeneous broadening: gamma is undefined and the ensemble "
            "cannot act as a memory"
        )
        return issues
    gamma = decay_rate(ensemble)
    if gamma > MARKOV_RATIO_LIMIT * width:
        issues.append(
            f"gamma/width = {gamma / width:.3g} is not small; exponential decay law "
            "is only approximate"
        )
    return issues


def check_validity(ensemble: EnsembleSpec) -> list[str]:
    """Emit a :class:`ValidityWarning` per issue and return the messages."""
    issues = validity_issues(ensemble)
    for msg in issues:
        warnings.warn(msg, ValidityWarning, stacklevel=2)
    return issues
