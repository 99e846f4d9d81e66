"""Per-qubit depolarizing noise and finite-shot estimation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .statevector import DensityMatrix

P_MAX = 0.75


@dataclass(frozen=True)
class NoiseSpec:
    """Depolarizing probability per qubit and shots per measurement setting."""

    p: float = 0.01
    shots: int = 10**6

    def __post_init__(self) -> None:
        check_probability(self.p)
        if int(self.shots) != self.shots or self.shots < 1:
            raise ValueError("shots must be a positive integer")

    @property
    def pauli_factor(self) -> float:
        return depolarizing_factor(self.p)


def check_probability(p: float) -> None:
    if not 0.0 <= p <= P_MAX:
        raise ValueError(f"depolarizing probability {p} outside [0, 3/4]")


def depolarizing_factor(p: float) -> float:
    """Factor by which one depolarizing channel shrinks ``<X>, <Y>, <Z>``."""
    check_probability(p)
    return 1.0 - 4.0 * p / 3.0


def _depolarize_qubit(rho: np.ndarray, q: int, n: int, p: float) -> np.ndarray:
    # (1-p) rho + p/3 (X rho X + Y rho Y + Z rho Z)
    #   = (1 - 4p/3) rho + (4p/3) * (Tr_q rho) (x) I/2
    t = rho.reshape((1 << q, 2, 1 << (n - q - 1), 1 << q, 2, 1 << (n - q - 1)))
    traced = t[:, 0, :, :, 0, :] + t[:, 1, :, :, 1, :]
    mixed = np.zeros_like(t)
    mixed[:, 0, :, :, 0, :] = 0.5 * traced
    mixed[:, 1, :, :, 1, :] = 0.5 * traced
    lam = 4.0 * p / 3.0
    return ((1.0 - lam) * t + lam * mixed).reshape(rho.shape)


def depolarize_all(rho: DensityMatrix, p: float) -> DensityMatrix:
    """Apply the depolarizing channel to qubits ``0, 1, ..., N-1`` in turn."""
    check_probability(p)
    if p == 0:
        return rho
    n = rho.n_qubits
    out = np.array(rho.entries)
    for q in range(n):
        out = _depolarize_qubit(out, q, n, p)
    return DensityMatrix(0.5 * (out + out.conj().T))


def sample_expectation(true_value: float, shots: int, rng: np.random.Generator) -> float:
    """Estimate a +/-1 observable with mean ``true_value`` from ``shots`` draws."""
    if not -1.0 - 1e-12 <= true_value <= 1.0 + 1e-12:
        raise ValueError(f"expectation {true_value} outside [-1, 1]")
    if int(shots) != shots or shots < 1:
        raise ValueError("shots must be a positive integer")
    prob = min(max((1.0 + true_value) / 2.0, 0.0), 1.0)
    m = rng.binomial(int(shots), prob)
    return 2.0 * m / shots - 1.0


def sample_expectations(true_values: np.ndarray, shots: int, rng: np.random.Generator) -> np.ndarray:
    """Vectorized :func:`sample_expectation` with independent draws per entry."""
    vals = np.asarray(true_values, dtype=float)
    if np.any(np.abs(vals) > 1.0 + 1e-9):
        raise ValueError("expectations must lie in [-1, 1]")
    if int(shots) != shots or shots < 1:
        raise ValueError("shots must be a positive integer")
    probs = np.clip((1.0 + vals) / 2.0, 0.0, 1.0)
    return 2.0 * rng.binomial(int(shots), probs) / shots - 1.0


def sample_family(
    probabilities: np.ndarray,
    n_qubits: int,
    shots: int,
    flip_probability: float,
    rng: np.random.Generator,
) -> np.ndarray:
    """Per-qubit +/-1 averages from ``shots`` joint measurements.

    ``probabilities`` is the outcome distribution of the noiseless state in
    the measured basis (basis-index order, qubit 0 most significant).
    Each recorded bit is then flipped independently with
    ``flip_probability``; this is how a depolarizing channel acts on a
    projective measurement in any Pauli basis.
    """
    if int(shots) != shots or shots < 1:
        raise ValueError("shots must be a positive integer")
    probs = np.clip(probabilities.real, 0.0, None)
    counts = rng.multinomial(int(shots), probs / probs.sum())
    idx = np.arange(probs.size)
    ones = np.array([int(counts[((idx >> (n_qubits - 1 - q)) & 1) == 1].sum()) for q in range(n_qubits)])
    if flip_probability > 0:
        stay = rng.binomial(ones, 1.0 - flip_probability)
        moved = rng.binomial(shots - ones, flip_probability)
        ones = stay + moved
    return 1.0 - 2.0 * ones / shots
