"""Two-site Hubbard model at half filling: closed forms and the linearity study.

Spin orbitals map to qubits as ``(0 up, 0 down, 1 up, 1 down)``; with
this ordering ``<Z0 Z1> = -f1(U)`` and ``<X0 Z1 X2> = +f2(U)`` on the
singlet ground state.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .fermion import FermionOperator, jordan_wigner
from .learner import Standardizer, fit_ols, per_target_mae
from .pauli import PauliString, PauliSum
from .statevector import SectorFilter, StateVector, exact_eigensystem, pauli_expectation
from .targets import TARGET_NAMES, TargetTriple, compute_targets

N_SITES = 2
N_QUBITS = 4
SECTOR = SectorFilter(particle_number=2, spin_layout="interleaved")
SINGLET_SECTOR = SectorFilter(particle_number=2, sz_twice=0, spin_layout="interleaved")
CASE_RANGES = {1: (0.1, 6.0), 2: (0.1, 20.0)}


@dataclass(frozen=True)
class HubbardParams:
    U: float

    def __post_init__(self) -> None:
        if not (self.U > 0 and math.isfinite(self.U)):
            raise ValueError("U must be a positive finite number")


def mode(site: int, spin: int) -> int:
    """Qubit index of spin orbital ``(site, spin)``; spin 0 is up."""
    return 2 * site + spin


def _as_params(params: HubbardParams | float) -> HubbardParams:
    return params if isinstance(params, HubbardParams) else HubbardParams(float(params))


def hubbard_hamiltonian(params: HubbardParams | float) -> tuple[FermionOperator, PauliSum]:
    U = _as_params(params).U
    op = FermionOperator()
    for s in (0, 1):
        a, b = mode(0, s), mode(1, s)
        op = op + FermionOperator.term(-1.0, (a, True), (b, False))
        op = op + FermionOperator.term(-1.0, (b, True), (a, False))
    for i in range(N_SITES):
        op = op + FermionOperator.term(
            U, (mode(i, 0), True), (mode(i, 0), False), (mode(i, 1), True), (mode(i, 1), False)
        )
    return op, jordan_wigner(op, N_QUBITS).real_part()


def dipole_operator() -> PauliSum:
    """Site imbalance ``(n_1up + n_1dn - n_0up - n_0dn) / 2``."""
    op = FermionOperator()
    for s in (0, 1):
        op = op + 0.5 * FermionOperator.number(mode(1, s))
        op = op + (-0.5) * FermionOperator.number(mode(0, s))
    return jordan_wigner(op, N_QUBITS).real_part()


def f1(U: float) -> float:
    return 1.0 / math.sqrt(1.0 + 16.0 / U**2)


def f2(U: float) -> float:
    return 1.0 / math.sqrt(1.0 + U**2 / 16.0)


def exact_properties(params: HubbardParams | float) -> TargetTriple:
    """Closed-form ``(dE1, dE2, |mu_eg|)`` in the two-electron sector."""
    U = _as_params(params).U
    root = math.sqrt(1.0 + 16.0 / U**2)
    return TargetTriple(
        delta_e1=0.5 * U * (root - 1.0),
        delta_e2=0.5 * U * (root + 1.0),
        dipole_norm=math.sqrt((1.0 - 1.0 / root) / 2.0),
    )


def ground_state(params: HubbardParams | float) -> tuple[float, StateVector]:
    """Non-degenerate singlet ground state (two electrons, ``S_z = 0``)."""
    _, h = hubbard_hamiltonian(params)
    return exact_eigensystem(h, SINGLET_SECTOR, k=1)[0]


def all_pauli_strings(n_qubits: int = N_QUBITS) -> list[PauliString]:
    return [PauliString.from_letters("".join(w)) for w in itertools.product("IXYZ", repeat=n_qubits)]


def pauli_scan(params: HubbardParams | float) -> dict[PauliString, float]:
    """Ground-state expectation of all ``4**4`` Pauli strings."""
    _, psi = ground_state(params)
    return {p: pauli_expectation(psi.amplitudes, p) for p in all_pauli_strings()}


FEATURE_STRINGS = (PauliString.parse("Z0 Z1", N_QUBITS), PauliString.parse("X0 Z1 X2", N_QUBITS))


def _sample_distinct(rng: np.random.Generator, lo: float, hi: float, count: int) -> np.ndarray:
    values: list[float] = []
    seen: set[float] = set()
    while len(values) < count:
        u = float(rng.uniform(lo, hi))
        if u not in seen:
            seen.add(u)
            values.append(u)
    return np.array(values)


@dataclass
class LinearityResult:
    case: int
    u_train: np.ndarray
    u_test: np.ndarray
    y_test_std: np.ndarray
    pred_test_std: np.ndarray
    y_test: np.ndarray
    pred_test: np.ndarray
    test_mae_std: dict[str, float]
    test_mae: dict[str, float]
    seed: int

    def to_dict(self) -> dict:
        return {
            "case": self.case,
            "seed": self.seed,
            "u_range": list(CASE_RANGES[self.case]),
            "n_train": int(self.u_train.size),
            "n_test": int(self.u_test.size),
            "test_mae_standardized": self.test_mae_std,
            "test_mae": self.test_mae,
        }


def linearity_experiment(case: int, n_train: int = 30, n_test: int = 50, seed: int = 0) -> LinearityResult:
    """Fit ``(dE1, dE2, |mu|)`` linearly from ``(<Z0Z1>, <X0Z1X2>)`` with no entangler.

    Training and test values of ``U`` are distinct uniform draws from the
    case range; features and targets are standardized by training
    mean/std before the OLS fit.
    """
    if case not in CASE_RANGES:
        raise ValueError(f"case must be one of {sorted(CASE_RANGES)}")
    lo, hi = CASE_RANGES[case]
    rng = np.random.default_rng(seed)
    us = _sample_distinct(rng, lo, hi, n_train + n_test)
    dip = dipole_operator()
    feats, targs = [], []
    for u in us:
        _, h = hubbard_hamiltonian(u)
        _, psi = ground_state(u)
        feats.append([pauli_expectation(psi.amplitudes, p) for p in FEATURE_STRINGS])
        targs.append(compute_targets(h, dip, SECTOR).as_array())
    x, y = np.array(feats), np.array(targs)
    x_std = Standardizer.fit(x[:n_train])
    y_std = Standardizer.fit(y[:n_train])
    xs, ys = x_std.apply(x), y_std.apply(y)
    w = np.column_stack([fit_ols(xs[:n_train], ys[:n_train, k]).weights for k in range(3)])
    pred_s = xs[n_train:] @ w
    pred = y_std.invert(pred_s)
    mae_s = per_target_mae(pred_s, ys[n_train:])
    mae_o = per_target_mae(pred, y[n_train:])
    return LinearityResult(
        case=case,
        u_train=us[:n_train],
        u_test=us[n_train:],
        y_test_std=ys[n_train:],
        pred_test_std=pred_s,
        y_test=y[n_train:],
        pred_test=pred,
        test_mae_std=dict(zip(TARGET_NAMES, map(float, mae_s))),
        test_mae=dict(zip(TARGET_NAMES, map(float, mae_o))),
        seed=seed,
    )
