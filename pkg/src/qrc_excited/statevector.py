"""Dense pure-state and density-matrix simulation.

Basis convention: qubit 0 is the most significant bit of a computational
basis index, so ``|q0 q1 ... q_{N-1}>`` reads left to right and matrices
are Kronecker products ``P_0 (x) P_1 (x) ...``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence, Union

import numpy as np

from .pauli import PauliString, PauliSum, _popcount

MAX_QUBITS = 12
NORM_TOL = 1e-10
DEGENERACY_TOL = 1e-9

_I_POWERS = np.array([1, 1j, -1, -1j])


def _check_size(n_qubits: int) -> None:
    if n_qubits > MAX_QUBITS:
        raise ValueError(f"{n_qubits} qubits exceeds the dense limit of {MAX_QUBITS}")


@dataclass(frozen=True)
class StateVector:
    """Normalized pure state of ``n_qubits`` qubits."""

    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        amps = np.asarray(self.amplitudes, dtype=complex)
        n = int(round(np.log2(amps.size)))
        if amps.ndim != 1 or 1 << n != amps.size or n < 1:
            raise ValueError("amplitude count must be 2**N with N >= 1")
        _check_size(n)
        if abs(np.linalg.norm(amps) - 1.0) > NORM_TOL:
            raise ValueError("state vector is not normalized")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def n_qubits(self) -> int:
        return int(self.amplitudes.size).bit_length() - 1

    @classmethod
    def basis(cls, bits: str | Sequence[int]) -> StateVector:
        """Computational basis state from a bit pattern, qubit 0 first."""
        bits = [int(b) for b in bits]
        idx = int("".join(map(str, bits)), 2)
        amps = np.zeros(1 << len(bits), dtype=complex)
        amps[idx] = 1.0
        return cls(amps)

    @classmethod
    def from_array(cls, amps: np.ndarray, normalize: bool = False) -> StateVector:
        amps = np.asarray(amps, dtype=complex)
        if normalize:
            amps = amps / np.linalg.norm(amps)
        return cls(amps)

    def density_matrix(self) -> DensityMatrix:
        return DensityMatrix(np.outer(self.amplitudes, self.amplitudes.conj()))

    def overlap(self, other: StateVector) -> complex:
        return complex(np.vdot(self.amplitudes, other.amplitudes))


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian, unit-trace, positive semidefinite operator."""

    entries: np.ndarray

    def __post_init__(self) -> None:
        rho = np.asarray(self.entries, dtype=complex)
        d = rho.shape[0]
        if rho.shape != (d, d) or d < 2 or d & (d - 1):
            raise ValueError("density matrix must be 2**N x 2**N")
        _check_size(d.bit_length() - 1)
        if np.abs(rho - rho.conj().T).max() > NORM_TOL:
            raise ValueError("density matrix is not Hermitian")
        if abs(np.trace(rho).real - 1.0) > NORM_TOL:
            raise ValueError("density matrix trace is not 1")
        if np.linalg.eigvalsh(rho).min() < -NORM_TOL:
            raise ValueError("density matrix has negative eigenvalues")
        rho.setflags(write=False)
        object.__setattr__(self, "entries", rho)

    @property
    def n_qubits(self) -> int:
        return self.entries.shape[0].bit_length() - 1


State = Union[StateVector, DensityMatrix]


@dataclass(frozen=True)
class SectorFilter:
    """Symmetry sector selected before diagonalization.

    ``spin_layout`` says which qubits carry spin up: ``"interleaved"``
    (even qubits up, odd down) or ``"blocked"`` (first half up).
    """

    particle_number: int | None = None
    sz_twice: int | None = None
    spin_layout: str = "interleaved"

    def __post_init__(self) -> None:
        if self.particle_number is not None and self.particle_number < 0:
            raise ValueError("particle_number must be non-negative")
        if self.spin_layout not in ("interleaved", "blocked"):
            raise ValueError(f"unknown spin layout {self.spin_layout!r}")

    def basis_indices(self, n_qubits: int) -> np.ndarray:
        if self.particle_number is not None and self.particle_number > n_qubits:
            raise ValueError("particle_number exceeds the number of modes")
        idx = np.arange(1 << n_qubits)
        keep = np.ones(idx.size, dtype=bool)
        if self.particle_number is not None:
            keep &= _popcounts(n_qubits) == self.particle_number
        if self.sz_twice is not None:
            up = up_qubit_mask(n_qubits, self.spin_layout)
            down = ((1 << n_qubits) - 1) ^ up
            n_up = _popcounts_masked(n_qubits, up)
            n_down = _popcounts_masked(n_qubits, down)
            keep &= (n_up - n_down) == self.sz_twice
        return idx[keep]


def up_qubit_mask(n_qubits: int, layout: str = "interleaved") -> int:
    """State-space bit mask of the spin-up qubits."""
    qubits = range(0, n_qubits, 2) if layout == "interleaved" else range(n_qubits // 2)
    return sum(1 << (n_qubits - 1 - q) for q in qubits)


@lru_cache(maxsize=None)
def _popcounts(n_qubits: int) -> np.ndarray:
    idx = np.arange(1 << n_qubits)
    out = np.zeros(idx.size, dtype=np.int64)
    for b in range(n_qubits):
        out += (idx >> b) & 1
    out.setflags(write=False)
    return out


def _popcounts_masked(n_qubits: int, mask: int) -> np.ndarray:
    idx = np.arange(1 << n_qubits) & mask
    out = np.zeros(idx.size, dtype=np.int64)
    for b in range(n_qubits):
        out += (idx >> b) & 1
    return out


def _state_mask(mask: int, n_qubits: int) -> int:
    """Reverse a qubit-indexed mask into basis-index bit order."""
    out = 0
    for q in range(n_qubits):
        if (mask >> q) & 1:
            out |= 1 << (n_qubits - 1 - q)
    return out


@lru_cache(maxsize=65536)
def pauli_action(p: PauliString) -> tuple[int, np.ndarray]:
    """``(flip, phase)`` with ``P|b> = phase[b] |b ^ flip>``."""
    n = p.n_qubits
    _check_size(n)
    flip = _state_mask(p.x, n)
    zs = _state_mask(p.z, n)
    idx = np.arange(1 << n)
    parity = np.zeros(idx.size, dtype=np.int64)
    masked = idx & zs
    for b in range(n):
        parity ^= (masked >> b) & 1
    phase = _I_POWERS[_popcount(p.x & p.z) % 4] * (1 - 2 * parity)
    phase = phase.astype(complex)
    phase.setflags(write=False)
    return flip, phase


def apply_pauli_array(psi: np.ndarray, p: PauliString) -> np.ndarray:
    flip, phase = pauli_action(p)
    idx = np.arange(psi.size) ^ flip
    return phase[idx] * psi[idx]


class CompiledPauliSum:
    """Precomputed gather tables for evaluating every term of a Pauli sum.

    Used in inner loops (VQE, scans) where the same operator is measured on
    many states.
    """

    def __init__(self, op: PauliSum) -> None:
        _check_size(op.n_qubits)
        self.n_qubits = op.n_qubits
        self.strings = list(op)
        self.coeffs = np.array([op.coefficient(p) for p in self.strings], dtype=complex)
        dim = 1 << op.n_qubits
        base = np.arange(dim)
        self.gather = np.empty((len(self.strings), dim), dtype=np.int64)
        self.phases = np.empty((len(self.strings), dim), dtype=complex)
        for t, p in enumerate(self.strings):
            flip, phase = pauli_action(p)
            self.gather[t] = base ^ flip
            self.phases[t] = phase
        self.supports = np.array([_popcount(p.x | p.z) for p in self.strings], dtype=np.int64)

    def term_expectations(self, psi: np.ndarray) -> np.ndarray:
        """Real parts of ``<psi|P_t|psi>`` for every term ``t``."""
        vals = np.einsum("td,td,d->t", psi.conj()[self.gather], self.phases, psi)
        return vals.real

    def expectation(self, psi: np.ndarray) -> float:
        return float(np.dot(self.coeffs.real, self.term_expectations(psi)))


def to_matrix(h: PauliSum, check_hermitian: bool = True) -> np.ndarray:
    """Dense ``2**N x 2**N`` matrix of a Hermitian Pauli sum."""
    if check_hermitian and not h.is_hermitian():
        raise ValueError("operator is not Hermitian")
    n = h.n_qubits
    _check_size(n)
    dim = 1 << n
    m = np.zeros((dim, dim), dtype=complex)
    base = np.arange(dim)
    for p, c in h.items():
        flip, phase = pauli_action(p)
        m[base ^ flip, base] += c * phase
    return m


def _as_array(state: StateVector | np.ndarray) -> np.ndarray:
    return state.amplitudes if isinstance(state, StateVector) else np.asarray(state, dtype=complex)


def exact_eigensystem(
    h: PauliSum,
    sector: SectorFilter | None = None,
    k: int | None = None,
) -> list[tuple[float, StateVector]]:
    """Lowest ``k`` eigenpairs of ``h`` inside a symmetry sector.

    The sector is a set of computational basis states (particle number is
    diagonal under Jordan-Wigner), so the restricted block is diagonalized
    directly and eigenvectors are embedded back into the full space.
    """
    matrix = to_matrix(h)
    n = h.n_qubits
    idx = (sector or SectorFilter()).basis_indices(n)
    if idx.size == 0:
        raise ValueError("requested symmetry sector is empty")
    k = idx.size if k is None else k
    if not 1 <= k <= idx.size:
        raise ValueError(f"k={k} outside 1..{idx.size} (sector dimension)")
    block = matrix[np.ix_(idx, idx)]
    if sector is not None and (sector.particle_number is not None or sector.sz_twice is not None):
        leak = np.abs(matrix[:, idx]).sum() - np.abs(block).sum()
        if leak > 1e-8:
            raise ValueError("Hamiltonian does not conserve the requested sector")
    evals, evecs = np.linalg.eigh(block)
    out = []
    for j in range(k):
        full = np.zeros(1 << n, dtype=complex)
        full[idx] = evecs[:, j]
        out.append((float(evals[j]), StateVector(full)))
    return out


def distinct_levels(energies: Sequence[float], tol: float = DEGENERACY_TOL) -> list[float]:
    """Collapse an ascending spectrum into distinct levels."""
    levels: list[float] = []
    for e in energies:
        if not levels or e - levels[-1] > tol:
            levels.append(float(e))
    return levels


def expectation(state: State | np.ndarray, a: PauliSum) -> float:
    """``<psi|A|psi>`` or ``Tr(rho A)`` for Hermitian ``A``."""
    if not a.is_hermitian():
        raise ValueError("observable is not Hermitian")
    total = 0.0 + 0.0j
    if isinstance(state, DensityMatrix):
        rho = state.entries
        base = np.arange(rho.shape[0])
        for p, c in a.items():
            flip, phase = pauli_action(p)
            total += c * np.dot(phase, rho[base, base ^ flip])
    else:
        psi = _as_array(state)
        for p, c in a.items():
            total += c * np.vdot(psi, apply_pauli_array(psi, p))
    if abs(total.imag) > 1e-10:
        raise ValueError(f"expectation has imaginary part {total.imag:.3g}")
    return float(total.real)


def pauli_expectation(psi: np.ndarray, p: PauliString) -> float:
    return float(np.vdot(psi, apply_pauli_array(psi, p)).real)


def time_evolution_operator(h: PauliSum, t: float) -> np.ndarray:
    """Exact ``exp(-iHt)`` via eigendecomposition."""
    evals, evecs = np.linalg.eigh(to_matrix(h))
    return (evecs * np.exp(-1j * evals * t)) @ evecs.conj().T


def evolve(state: StateVector, h: PauliSum, t: float) -> StateVector:
    """``exp(-iHt)|psi>``."""
    if h.n_qubits != state.n_qubits:
        raise ValueError("state and Hamiltonian sizes differ")
    if t == 0:
        return state
    evals, evecs = np.linalg.eigh(to_matrix(h))
    coeffs = evecs.conj().T @ state.amplitudes
    out = evecs @ (np.exp(-1j * evals * t) * coeffs)
    return StateVector(out / np.linalg.norm(out))


def evolve_density(rho: DensityMatrix, h: PauliSum, t: float) -> DensityMatrix:
    """``U rho U^dagger`` with ``U = exp(-iHt)``."""
    if h.n_qubits != rho.n_qubits:
        raise ValueError("state and Hamiltonian sizes differ")
    if t == 0:
        return rho
    u = time_evolution_operator(h, t)
    out = u @ rho.entries @ u.conj().T
    return DensityMatrix(0.5 * (out + out.conj().T))


def apply_pauli_rotation(state: StateVector, p: PauliString, theta: float) -> StateVector:
    """``exp(-i theta P / 2)|psi>``."""
    psi = state.amplitudes
    out = np.cos(theta / 2) * psi - 1j * np.sin(theta / 2) * apply_pauli_array(psi, p)
    return StateVector(out)


def number_expectation(psi: np.ndarray) -> float:
    """Expected occupation under the Jordan-Wigner convention ``|1>`` = filled."""
    n = int(psi.size).bit_length() - 1
    return float(np.dot(np.abs(psi) ** 2, _popcounts(n)))
