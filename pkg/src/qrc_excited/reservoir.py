"""Random transverse-field Ising entangler and the single-qubit Pauli feature map."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Any

import numpy as np

from . import noise as _noise
from .pauli import PauliString, PauliSum
from .statevector import (
    DensityMatrix,
    StateVector,
    evolve_density,
    expectation,
    time_evolution_operator,
)

_HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
# maps the Y eigenbasis onto the computational basis: H S^dagger
_Y_TO_Z = _HADAMARD @ np.diag([1, -1j])


@dataclass(frozen=True)
class ReservoirSpec:
    """Coefficients of ``sum_ij J_ij Z_i Z_j + sum_i h_i X_i`` and the evolution time.

    ``J`` is the full ``N x N`` matrix of independent draws (diagonal and
    both orderings of each pair included), stored as nested tuples so the
    spec is hashable.
    """

    n_qubits: int
    J: tuple[tuple[float, ...], ...]
    h: tuple[float, ...]
    T: float = 10.0
    seed: int | None = None
    J_mean: float = 0.75
    J_std: float = 0.1
    h_mean: float = 1.0
    h_std: float = 0.1

    def __post_init__(self) -> None:
        j = np.asarray(self.J, dtype=float)
        h = np.asarray(self.h, dtype=float)
        if j.shape != (self.n_qubits, self.n_qubits) or h.shape != (self.n_qubits,):
            raise ValueError("coupling shapes do not match n_qubits")
        if not (np.all(np.isfinite(j)) and np.all(np.isfinite(h))):
            raise ValueError("reservoir coefficients must be finite")
        if self.T < 0:
            raise ValueError("evolution time must be non-negative")

    @property
    def couplings(self) -> np.ndarray:
        return np.array(self.J, dtype=float)

    @property
    def fields(self) -> np.ndarray:
        return np.array(self.h, dtype=float)

    def with_time(self, T: float) -> ReservoirSpec:
        return replace(self, T=float(T))

    def to_dict(self) -> dict[str, Any]:
        return {
            "n_qubits": self.n_qubits,
            "J": [list(r) for r in self.J],
            "h": list(self.h),
            "T": self.T,
            "seed": self.seed,
            "J_mean": self.J_mean,
            "J_std": self.J_std,
            "h_mean": self.h_mean,
            "h_std": self.h_std,
        }


def sample_reservoir(n_qubits: int, seed: int | None = None, **overrides: Any) -> ReservoirSpec:
    """Draw ``h_i ~ N(h_mean, h_std)`` then ``J_ij ~ N(J_mean, J_std)``.

    ``overrides`` may set ``T``, ``J_mean``, ``J_std``, ``h_mean``, ``h_std``.
    The same seed always reproduces identical coefficients.
    """
    params = {"T": 10.0, "J_mean": 0.75, "J_std": 0.1, "h_mean": 1.0, "h_std": 0.1}
    unknown = set(overrides) - set(params)
    if unknown:
        raise TypeError(f"unknown reservoir overrides: {sorted(unknown)}")
    params.update(overrides)
    rng = np.random.default_rng(seed)
    h = rng.normal(params["h_mean"], params["h_std"], size=n_qubits)
    j = rng.normal(params["J_mean"], params["J_std"], size=(n_qubits, n_qubits))
    return ReservoirSpec(
        n_qubits=n_qubits,
        J=tuple(tuple(float(v) for v in row) for row in j),
        h=tuple(float(v) for v in h),
        T=float(params["T"]),
        seed=seed,
        J_mean=float(params["J_mean"]),
        J_std=float(params["J_std"]),
        h_mean=float(params["h_mean"]),
        h_std=float(params["h_std"]),
    )


def tfim_hamiltonian(spec: ReservoirSpec) -> PauliSum:
    """Pauli form of the entangler Hamiltonian.

    Diagonal couplings fold into the identity coefficient and each pair
    ``(i, j)``, ``(j, i)`` becomes one ``Z_i Z_j`` term.
    """
    n = spec.n_qubits
    j = spec.couplings
    terms: list[tuple[PauliString, complex]] = [(PauliString(n), float(np.trace(j)))]
    for a in range(n):
        for b in range(a + 1, n):
            terms.append((PauliString(n, 0, (1 << a) | (1 << b)), j[a, b] + j[b, a]))
        terms.append((PauliString(n, 1 << a, 0), spec.h[a]))
    return PauliSum(n, terms)


@lru_cache(maxsize=32)
def entangler_unitary(spec: ReservoirSpec) -> np.ndarray:
    if spec.T == 0:
        return np.eye(1 << spec.n_qubits, dtype=complex)
    return time_evolution_operator(tfim_hamiltonian(spec), spec.T)


@dataclass(frozen=True)
class FeatureVector:
    """``(<X_0>..<X_{N-1}>, <Y_0>.., <Z_0>..<Z_{N-1}>)`` after the entangler."""

    values: np.ndarray
    mode: str = "noiseless"
    p: float | None = None
    shots: int | None = None
    seed: Any = field(default=None, compare=False)

    @property
    def n_qubits(self) -> int:
        return self.values.size // 3

    def component(self, letter: str) -> np.ndarray:
        k = "XYZ".index(letter)
        n = self.n_qubits
        return self.values[k * n : (k + 1) * n]


def single_qubit_paulis(n_qubits: int) -> list[PauliString]:
    """Measured observables in feature order."""
    return [PauliString.from_ops(n_qubits, [(q, letter)]) for letter in "XYZ" for q in range(n_qubits)]


def _local_expectations(psi: np.ndarray, n: int) -> np.ndarray:
    """All single-qubit ``<X>, <Y>, <Z>`` from one-qubit reduced density matrices."""
    out = np.empty(3 * n)
    for q in range(n):
        t = psi.reshape(1 << q, 2, 1 << (n - q - 1))
        rho01 = np.vdot(t[:, 1, :], t[:, 0, :])  # sum psi_0 conj(psi_1)
        p0 = np.vdot(t[:, 0, :], t[:, 0, :]).real
        p1 = np.vdot(t[:, 1, :], t[:, 1, :]).real
        out[q] = 2.0 * rho01.real
        out[n + q] = -2.0 * rho01.imag
        out[2 * n + q] = p0 - p1
    return out


def reservoir_output(state: StateVector, spec: ReservoirSpec) -> np.ndarray:
    """Amplitudes of ``U_ent |psi>``."""
    if state.n_qubits != spec.n_qubits:
        raise ValueError(f"state has {state.n_qubits} qubits, reservoir has {spec.n_qubits}")
    return entangler_unitary(spec) @ state.amplitudes


def extract_features_noiseless(state: StateVector, spec: ReservoirSpec) -> FeatureVector:
    psi = reservoir_output(state, spec)
    return FeatureVector(_local_expectations(psi, spec.n_qubits))


def _rotate_all(psi: np.ndarray, gate: np.ndarray, n: int) -> np.ndarray:
    t = psi.reshape((2,) * n)
    for q in range(n):
        t = np.moveaxis(np.tensordot(gate, t, axes=([1], [q])), 0, q)
    return t.reshape(-1)


def _family_probabilities(psi: np.ndarray, letter: str, n: int) -> np.ndarray:
    if letter == "X":
        psi = _rotate_all(psi, _HADAMARD, n)
    elif letter == "Y":
        psi = _rotate_all(psi, _Y_TO_Z, n)
    return np.abs(psi) ** 2


def extract_features_noisy(
    state: StateVector,
    spec: ReservoirSpec,
    p: float = 0.01,
    shots: int | None = 10**6,
    rng_seed: Any = None,
) -> FeatureVector:
    """Features under per-qubit depolarizing noise and finite shots.

    The ``X``, ``Y`` and ``Z`` families are each one measurement setting:
    ``shots`` joint samples are drawn per family and every qubit's average
    is read off the same samples.  ``shots=None`` returns the exact
    post-channel expectations.
    """
    _noise.check_probability(p)
    if shots is not None and (int(shots) != shots or shots < 1):
        raise ValueError("shots must be a positive integer")
    n = spec.n_qubits
    psi = reservoir_output(state, spec)
    if shots is None:
        values = _noise.depolarizing_factor(p) * _local_expectations(psi, n)
    else:
        rng = np.random.default_rng(rng_seed)
        flip = 2.0 * p / 3.0
        values = np.concatenate(
            [_noise.sample_family(_family_probabilities(psi, k, n), n, int(shots), flip, rng) for k in "XYZ"]
        )
    return FeatureVector(values, mode="noisy", p=p, shots=shots, seed=rng_seed)


def extract_features_density(state: StateVector | DensityMatrix, spec: ReservoirSpec, p: float) -> FeatureVector:
    """Exact noisy features through the full density-matrix channel (slow reference path)."""
    rho = state.density_matrix() if isinstance(state, StateVector) else state
    if spec.T:
        rho = evolve_density(rho, tfim_hamiltonian(spec), spec.T)
    rho = _noise.depolarize_all(rho, p)
    n = spec.n_qubits
    values = np.array([expectation(rho, PauliSum.from_string(s)) for s in single_qubit_paulis(n)])
    return FeatureVector(values, mode="noisy", p=p, shots=None)
