"""Excited-state learning targets from exact diagonalization."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .pauli import PauliSum
from .statevector import DEGENERACY_TOL, SectorFilter, StateVector, exact_eigensystem, to_matrix

DIPOLE_TOL = 1e-6


class TargetError(RuntimeError):
    """No usable excited state (e.g. every transition dipole vanishes)."""


@dataclass(frozen=True)
class TargetTriple:
    """``(dE1, dE2, |mu_eg|)`` in Hartree / atomic units."""

    delta_e1: float
    delta_e2: float
    dipole_norm: float

    def __post_init__(self) -> None:
        if not (self.delta_e2 >= self.delta_e1 >= 0 and self.dipole_norm >= 0):
            raise ValueError(f"invalid target triple {self}")

    def as_array(self) -> np.ndarray:
        return np.array([self.delta_e1, self.delta_e2, self.dipole_norm])


TARGET_NAMES = ("delta_e1", "delta_e2", "dipole_norm")


@dataclass(frozen=True)
class SpectrumSummary:
    ground_energy: float
    ground_state: StateVector
    levels: list[float]
    excited_energy: float
    targets: TargetTriple


def _group_levels(energies: np.ndarray, tol: float) -> list[list[int]]:
    groups: list[list[int]] = []
    for i, e in enumerate(energies):
        if groups and e - energies[groups[-1][0]] <= tol:
            groups[-1].append(i)
        else:
            groups.append([i])
    return groups


def analyze_spectrum(
    h: PauliSum,
    dipole: Sequence[PauliSum],
    sector: SectorFilter,
    degeneracy_tol: float = DEGENERACY_TOL,
    dipole_tol: float = DIPOLE_TOL,
) -> SpectrumSummary:
    """Diagonalize ``h`` in ``sector`` and extract the learning targets.

    Levels closer than ``degeneracy_tol`` count once.  The transition dipole
    of a degenerate level is the norm of the projection of ``mu|psi_0>``
    onto that level, which is basis independent.
    """
    pairs = exact_eigensystem(h, sector)
    energies = np.array([e for e, _ in pairs])
    vecs = np.column_stack([v.amplitudes for _, v in pairs])
    groups = _group_levels(energies, degeneracy_tol)
    if len(groups) < 3:
        raise TargetError("sector has fewer than three distinct levels")
    if len(groups[0]) != 1:
        raise TargetError("ground level is degenerate")
    psi0 = vecs[:, 0]
    mu_psi0 = [to_matrix(d) @ psi0 for d in dipole]
    levels = [float(energies[g[0]]) for g in groups]
    for g in groups[1:]:
        amp2 = sum(float(np.sum(np.abs(vecs[:, g].conj().T @ m) ** 2)) for m in mu_psi0)
        norm = np.sqrt(amp2)
        if norm > dipole_tol:
            e0 = levels[0]
            triple = TargetTriple(levels[1] - e0, levels[2] - e0, float(norm))
            return SpectrumSummary(e0, StateVector(psi0), levels, float(energies[g[0]]), triple)
    raise TargetError("no excited state with non-zero transition dipole in the sector")


def compute_targets(
    h: PauliSum,
    dipole: Sequence[PauliSum] | PauliSum,
    sector: SectorFilter,
) -> TargetTriple:
    """``(E1 - E0, E2 - E0, |<psi_0|mu|psi_ex>|)`` over distinct sector levels."""
    if isinstance(dipole, PauliSum):
        dipole = [dipole]
    return analyze_spectrum(h, dipole, sector).targets
