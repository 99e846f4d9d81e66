"""Variational ground states (VQE) and subspace search for excited states (SSVQE).

Ansatz circuits are ordered lists of Pauli rotations ``exp(-i a P / 2)``
acting on a computational-basis reference, with ``a = prefactor * theta[k]``.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize

from .fermion import FermionOperator, jordan_wigner
from .noise import NoiseSpec, depolarizing_factor, sample_expectations
from .pauli import PauliString, PauliSum, strings_commute
from .statevector import CompiledPauliSum, StateVector, pauli_action, to_matrix

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Rotation:
    string: PauliString
    param: int
    prefactor: float


@dataclass(frozen=True)
class Ansatz:
    """Parameterized circuit ``U(theta)`` together with its reference state."""

    n_qubits: int
    reference: tuple[int, ...]
    rotations: tuple[Rotation, ...]
    n_params: int
    labels: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if len(self.reference) != self.n_qubits or any(b not in (0, 1) for b in self.reference):
            raise ValueError("reference must be a bit pattern over all qubits")
        for r in self.rotations:
            if r.string.n_qubits != self.n_qubits:
                raise ValueError(f"rotation {r.string} has the wrong qubit count")
            if not 0 <= r.param < self.n_params:
                raise ValueError(f"parameter index {r.param} out of range")

    @cached_property
    def _tables(self) -> list[tuple[np.ndarray, np.ndarray, int, float]]:
        base = np.arange(1 << self.n_qubits)
        out = []
        for r in self.rotations:
            flip, phase = pauli_action(r.string)
            gather = base ^ flip
            out.append((gather, phase[gather], r.param, r.prefactor))
        return out

    def reference_index(self, bits: Sequence[int] | None = None) -> int:
        bits = self.reference if bits is None else bits
        return int("".join(str(int(b)) for b in bits), 2)

    def prepare_array(self, theta: np.ndarray, reference: Sequence[int] | None = None) -> np.ndarray:
        psi = np.zeros(1 << self.n_qubits, dtype=complex)
        psi[self.reference_index(reference)] = 1.0
        return self.apply_array(theta, psi)

    def apply_array(self, theta: np.ndarray, psi: np.ndarray) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (self.n_params,):
            raise ValueError(f"expected {self.n_params} parameters, got shape {theta.shape}")
        for gather, phase, k, pref in self._tables:
            a = 0.5 * pref * theta[k]
            if a:
                psi = math.cos(a) * psi - 1j * math.sin(a) * (phase * psi[gather])
        return psi

    def prepare(self, theta: np.ndarray, reference: Sequence[int] | None = None) -> StateVector:
        return StateVector.from_array(self.prepare_array(theta, reference), normalize=True)


def single_qubit_ansatz(letter: str = "Y") -> Ansatz:
    """One rotation ``exp(-i theta P_0 / 2)`` on ``|0>``."""
    return Ansatz(1, (0,), (Rotation(PauliString.parse(f"{letter}0", 1), 0, 1.0),), 1, ("r0",))


def _spin_of(q: int, n: int, layout: str) -> int:
    return q % 2 if layout == "interleaved" else int(q >= n // 2)


def hartree_fock_bits(n_spin_orbitals: int, n_electrons: int, layout: str = "interleaved") -> tuple[int, ...]:
    if not 0 <= n_electrons <= n_spin_orbitals:
        raise ValueError("invalid electron count")
    if layout == "interleaved":
        occ = set(range(n_electrons))
    else:
        half = n_spin_orbitals // 2
        n_up = (n_electrons + 1) // 2
        occ = set(range(n_up)) | {half + i for i in range(n_electrons - n_up)}
    return tuple(int(q in occ) for q in range(n_spin_orbitals))


def excitation_generator(occupied: Sequence[int], virtual: Sequence[int], n_qubits: int) -> PauliSum:
    """Jordan-Wigner image of ``T - T^dagger`` with ``T = c_a^+ c_b^+ ... c_j c_i``."""
    ops = [(a, True) for a in virtual] + [(i, False) for i in reversed(occupied)]
    t = FermionOperator.term(1.0, *ops)
    return jordan_wigner(t - t.dagger(), n_qubits)


def _rotations_for(gen: PauliSum, param: int) -> list[Rotation]:
    # gen = i * sum_P g_P P, so exp(theta gen) = prod_P exp(-i (-2 g_P theta) P / 2)
    strings = sorted(gen)
    for a, b in itertools.combinations(strings, 2):
        if not strings_commute(a, b):
            raise ValueError("excitation generator terms do not commute")
    out = []
    for p in strings:
        c = gen.coefficient(p)
        if abs(c.real) > 1e-12:
            raise ValueError("excitation generator is not anti-Hermitian")
        out.append(Rotation(p, param, -2.0 * c.imag))
    return out


def _excitations(
    n: int,
    layout: str,
    occ: Sequence[int],
    virt: Sequence[int],
) -> list[tuple[tuple[int, ...], tuple[int, ...]]]:
    spin = lambda q: _spin_of(q, n, layout)  # noqa: E731
    singles = [((i,), (a,)) for i in occ for a in virt if spin(i) == spin(a)]
    doubles = []
    for i, j in itertools.combinations(occ, 2):
        for a, b in itertools.combinations(virt, 2):
            if spin(i) + spin(j) == spin(a) + spin(b):
                doubles.append(((i, j), (a, b)))
    return singles + doubles


def build_uccsd_ansatz(n_spin_orbitals: int, n_electrons: int, layout: str = "interleaved") -> Ansatz:
    """Single-step Trotterized UCCSD on the Hartree-Fock reference.

    One parameter per spin-conserving single and double excitation, singles
    before doubles, each group in lexicographic order.  The circuit is the
    operator product ``U = prod_singles exp(theta T) prod_doubles exp(theta T)``
    so the doubles act on the reference first; the reverse order cannot
    reach the correlated two-site ground state.
    """
    ref = hartree_fock_bits(n_spin_orbitals, n_electrons, layout)
    occ = [q for q, b in enumerate(ref) if b]
    virt = [q for q, b in enumerate(ref) if not b]
    excitations = _excitations(n_spin_orbitals, layout, occ, virt)
    labels = tuple(f"{o}->{v}" for o, v in excitations)
    rotations: list[Rotation] = []
    for k in sorted(range(len(excitations)), key=lambda k: -len(excitations[k][0])):
        o, v = excitations[k]
        rotations.extend(_rotations_for(excitation_generator(o, v, n_spin_orbitals), k))
    return Ansatz(n_spin_orbitals, ref, tuple(rotations), len(labels), labels)


def build_generalized_ansatz(
    n_spin_orbitals: int,
    reference: Sequence[int],
    layers: int = 2,
    layout: str = "interleaved",
) -> Ansatz:
    """Particle- and S_z-conserving layers of generalized singles and doubles.

    Unlike UCCSD every orbital pair counts as both occupied and virtual, which
    makes the circuit expressive enough to rotate several orthogonal
    references at once (needed for subspace search).
    """
    qubits = range(n_spin_orbitals)
    spin = lambda q: _spin_of(q, n_spin_orbitals, layout)  # noqa: E731
    gens: list[tuple[tuple[int, ...], tuple[int, ...]]] = []
    for i, a in itertools.combinations(qubits, 2):
        if spin(i) == spin(a):
            gens.append(((i,), (a,)))
    pairs = list(itertools.combinations(qubits, 2))
    for (i, j), (a, b) in itertools.combinations(pairs, 2):
        if {i, j} & {a, b}:
            continue
        if spin(i) + spin(j) == spin(a) + spin(b):
            gens.append(((i, j), (a, b)))
    rotations: list[Rotation] = []
    labels = []
    k = 0
    for layer in range(layers):
        for o, v in gens:
            rotations.extend(_rotations_for(excitation_generator(o, v, n_spin_orbitals), k))
            labels.append(f"L{layer}:{o}->{v}")
            k += 1
    return Ansatz(n_spin_orbitals, tuple(int(b) for b in reference), tuple(rotations), k, tuple(labels))


@dataclass(frozen=True)
class VqeConfig:
    """Optimizer and measurement settings.

    ``shots=None`` evaluates exact expectations.  When ``noise`` is set,
    term expectations are damped before sampling according to ``damping``:
    ``"single_qubit"`` scales only support-1 terms by ``1 - 4p/3``,
    ``"all"`` scales a support-``w`` term by ``(1 - 4p/3)**w`` (the exact
    effect of one depolarizing layer on every qubit before measurement)
    and ``"none"`` leaves them untouched.
    """

    optimizer: str = "nelder_mead"
    max_iterations: int = 2000
    tolerance: float = 1e-10
    shots: int | None = None
    noise: NoiseSpec | None = None
    damping: str = "single_qubit"
    seed: int | None = 0
    init_perturbation: float = 0.0
    spsa_a: float = 0.05
    spsa_c: float = 0.05
    spsa_alpha: float = 0.602
    spsa_gamma: float = 0.101
    spsa_average: float = 0.2

    def __post_init__(self) -> None:
        if self.optimizer not in ("nelder_mead", "spsa"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if self.shots is not None and self.shots < 1:
            raise ValueError("shots must be >= 1")
        if self.damping not in ("none", "single_qubit", "all"):
            raise ValueError(f"unknown damping mode {self.damping!r}")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")

    def to_dict(self) -> dict:
        out = {k: getattr(self, k) for k in self.__dataclass_fields__ if k != "noise"}
        out["noise"] = None if self.noise is None else {"p": self.noise.p}
        return out


class EnergyEstimator:
    """Evaluates ``<psi|H|psi>`` exactly or with per-term shot sampling."""

    def __init__(self, h: PauliSum, config: VqeConfig, rng: np.random.Generator | None = None) -> None:
        if not h.is_hermitian():
            raise ValueError("Hamiltonian is not Hermitian")
        self.n_qubits = h.n_qubits
        self.config = config
        self.rng = rng if rng is not None else np.random.default_rng(config.seed)
        identity = PauliString(h.n_qubits)
        self.constant = h.coefficient(identity).real
        rest = PauliSum(h.n_qubits, [(p, c) for p, c in h.items() if p != identity])
        self.compiled = CompiledPauliSum(rest) if rest else None
        self.matrix = to_matrix(h) if config.shots is None and config.noise is None else None
        self.damping = None
        if config.noise is not None and self.compiled is not None and config.damping != "none":
            f = depolarizing_factor(config.noise.p)
            if config.damping == "all":
                self.damping = f**self.compiled.supports
            else:
                self.damping = np.where(self.compiled.supports == 1, f, 1.0)
        self.n_evaluations = 0

    def exact(self, psi: np.ndarray) -> float:
        if self.matrix is not None:
            return float(np.vdot(psi, self.matrix @ psi).real)
        if self.compiled is None:
            return self.constant
        return self.constant + self.compiled.expectation(psi)

    def __call__(self, psi: np.ndarray) -> float:
        self.n_evaluations += 1
        if self.compiled is None:
            return self.constant
        if self.matrix is not None:
            return self.exact(psi)
        vals = self.compiled.term_expectations(psi)
        if self.damping is not None:
            vals = vals * self.damping
        if self.config.shots is not None:
            vals = sample_expectations(np.clip(vals, -1.0, 1.0), self.config.shots, self.rng)
        return self.constant + float(np.dot(self.compiled.coeffs.real, vals))


def vqe_energy(
    h: PauliSum,
    ansatz: Ansatz,
    theta: np.ndarray,
    config: VqeConfig | None = None,
    rng: np.random.Generator | None = None,
) -> float:
    if h.n_qubits != ansatz.n_qubits:
        raise ValueError("Hamiltonian and ansatz sizes differ")
    est = EnergyEstimator(h, config or VqeConfig(), rng)
    return est(ansatz.prepare_array(theta))


@dataclass
class TraceEntry:
    step: int
    energy: float
    theta_norm: float

    def to_dict(self) -> dict:
        return {"step": self.step, "energy": self.energy, "theta_norm": self.theta_norm}


@dataclass
class VqeResult:
    theta: np.ndarray
    energy: float
    trace: list[TraceEntry] = field(default_factory=list)
    converged: bool = True
    n_evaluations: int = 0
    message: str = ""

    def trace_dicts(self) -> list[dict]:
        return [t.to_dict() for t in self.trace]

    def __iter__(self):
        return iter((self.theta, self.energy, self.trace))


def _initial_theta(n: int, config: VqeConfig, rng: np.random.Generator) -> np.ndarray:
    theta = np.zeros(n)
    if config.init_perturbation > 0:
        theta += rng.uniform(-config.init_perturbation, config.init_perturbation, size=n)
    return theta


def spsa_minimize(
    objective: Callable[[np.ndarray], float],
    theta0: np.ndarray,
    config: VqeConfig,
    rng: np.random.Generator,
) -> VqeResult:
    """Simultaneous-perturbation stochastic approximation with standard gain decay.

    The returned point is the average of the trailing ``spsa_average``
    fraction of iterates; under shot noise this is a far better estimate of
    the minimizer than the best single noisy reading.
    """
    theta = np.array(theta0, dtype=float)
    n_iter = config.max_iterations
    big_a = 0.1 * n_iter
    tail_start = int((1.0 - config.spsa_average) * n_iter)
    tail: list[np.ndarray] = []
    trace = []
    for k in range(n_iter):
        ak = config.spsa_a / (k + 1 + big_a) ** config.spsa_alpha
        ck = config.spsa_c / (k + 1) ** config.spsa_gamma
        delta = rng.choice((-1.0, 1.0), size=theta.size)
        f_plus = objective(theta + ck * delta)
        f_minus = objective(theta - ck * delta)
        grad = (f_plus - f_minus) / (2.0 * ck) * delta
        theta = theta - ak * grad
        if k >= tail_start:
            tail.append(theta.copy())
        trace.append(TraceEntry(k, 0.5 * (f_plus + f_minus), float(np.linalg.norm(theta))))
    theta_star = np.mean(tail, axis=0) if tail else theta
    return VqeResult(theta_star, float("nan"), trace, True, 2 * n_iter, "spsa finished")


def _nelder_mead(objective: Callable[[np.ndarray], float], theta0: np.ndarray, config: VqeConfig) -> VqeResult:
    trace: list[TraceEntry] = []

    def cb(xk: np.ndarray) -> None:
        trace.append(TraceEntry(len(trace), float(objective(xk)), float(np.linalg.norm(xk))))

    res = minimize(
        objective,
        theta0,
        method="Nelder-Mead",
        callback=cb,
        options={
            "maxiter": config.max_iterations,
            "maxfev": 20 * config.max_iterations,
            "xatol": 1e-8,
            "fatol": config.tolerance,
            "adaptive": theta0.size > 4,
            "initial_simplex": _initial_simplex(theta0, 0.1),
        },
    )
    return VqeResult(res.x, float(res.fun), trace, bool(res.success), int(res.nfev), str(res.message))


def _initial_simplex(theta0: np.ndarray, step: float) -> np.ndarray:
    simplex = np.tile(theta0, (theta0.size + 1, 1))
    for i in range(theta0.size):
        simplex[i + 1, i] += step
    return simplex


def vqe_optimize(h: PauliSum, ansatz: Ansatz, config: VqeConfig | None = None) -> VqeResult:
    """Minimize the ansatz energy; returns parameters, energy and an iteration log.

    Nelder-Mead restarts from its own optimum until an extra run no longer
    improves the energy by more than ``tolerance``.
    """
    config = config or VqeConfig()
    if h.n_qubits != ansatz.n_qubits:
        raise ValueError("Hamiltonian and ansatz sizes differ")
    rng = np.random.default_rng(config.seed)
    est = EnergyEstimator(h, config, rng)
    objective = lambda th: est(ansatz.prepare_array(th))  # noqa: E731
    theta0 = _initial_theta(ansatz.n_params, config, rng)
    if ansatz.n_params == 0:
        return VqeResult(theta0, objective(theta0), [], True, 1, "no parameters")
    if config.optimizer == "spsa":
        result = spsa_minimize(objective, theta0, config, rng)
        result.energy = objective(result.theta)
    else:
        result = _nelder_mead(objective, theta0, config)
        for _ in range(5):
            again = _nelder_mead(objective, result.theta, config)
            improved = result.energy - again.energy
            again.trace = result.trace + again.trace
            again.n_evaluations += result.n_evaluations
            if again.energy <= result.energy:
                result = again
            if improved <= config.tolerance:
                break
    if not result.converged:
        log.warning("VQE did not converge: %s", result.message)
    result.n_evaluations = est.n_evaluations
    return result


@dataclass(frozen=True)
class SsvqeProblem:
    """Orthogonal reference bit patterns with strictly decreasing weights."""

    references: tuple[tuple[int, ...], ...]
    weights: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.references) != len(self.weights) or not self.references:
            raise ValueError("need one weight per reference")
        if len(set(self.references)) != len(self.references):
            raise ValueError("references must be distinct (orthogonal) basis states")
        if any(w <= 0 for w in self.weights):
            raise ValueError("weights must be positive")
        if any(a <= b for a, b in zip(self.weights, self.weights[1:])):
            raise ValueError("weights must be strictly decreasing")

    @property
    def k(self) -> int:
        return len(self.references)

    @classmethod
    def with_linear_weights(cls, references: Sequence[Sequence[int]]) -> SsvqeProblem:
        k = len(references)
        return cls(tuple(tuple(int(b) for b in r) for r in references), tuple(float(k - i) for i in range(k)))


def ssvqe_states(ansatz: Ansatz, theta: np.ndarray, problem: SsvqeProblem) -> list[np.ndarray]:
    return [ansatz.prepare_array(theta, ref) for ref in problem.references]


def ssvqe_cost(h: PauliSum, ansatz: Ansatz, theta: np.ndarray, problem: SsvqeProblem) -> float:
    """``sum_i w_i <psi_i|H|psi_i>`` with ``psi_i = U(theta)|phi_i>``."""
    if h.n_qubits != ansatz.n_qubits:
        raise ValueError("Hamiltonian and ansatz sizes differ")
    m = to_matrix(h)
    return float(
        sum(w * np.vdot(psi, m @ psi).real for w, psi in zip(problem.weights, ssvqe_states(ansatz, theta, problem)))
    )


def ssvqe_optimize(
    h: PauliSum,
    ansatz: Ansatz,
    problem: SsvqeProblem,
    config: VqeConfig | None = None,
) -> list[tuple[float, StateVector]]:
    """Minimize the weighted subspace cost; returns ``(energy, state)`` ascending.

    The cost is a smooth exact objective here, so a quasi-Newton polish
    (L-BFGS-B) follows the gradient-free stage.
    """
    config = config or VqeConfig()
    if h.n_qubits != ansatz.n_qubits:
        raise ValueError("Hamiltonian and ansatz sizes differ")
    m = to_matrix(h)
    weights = np.array(problem.weights)

    def cost(theta: np.ndarray) -> float:
        states = ssvqe_states(ansatz, theta, problem)
        return float(sum(w * np.vdot(s, m @ s).real for w, s in zip(weights, states)))

    rng = np.random.default_rng(config.seed)
    best = None
    for restart in range(4):
        theta0 = _initial_theta(ansatz.n_params, config, rng) if restart == 0 else rng.uniform(-np.pi, np.pi, ansatz.n_params)
        res = minimize(cost, theta0, method="L-BFGS-B", options={"maxiter": config.max_iterations, "ftol": 1e-15, "gtol": 1e-10})
        if best is None or res.fun < best.fun:
            best = res
    states = ssvqe_states(ansatz, best.x, problem)
    out = [(float(np.vdot(s, m @ s).real), StateVector.from_array(s, normalize=True)) for s in states]
    return sorted(out, key=lambda t: t[0])
