"""Fermionic ladder-operator polynomials and the Jordan-Wigner map.

Convention: mode ``m`` lives on qubit ``m``; ``|0>`` is the empty mode and
``Z|0> = +|0>``.  Then::

    c_m^dagger -> Z_0 ... Z_{m-1} (X_m - i Y_m) / 2
    c_m        -> Z_0 ... Z_{m-1} (X_m + i Y_m) / 2

and ``n_m -> (I - Z_m) / 2``.  The alternating global sign of the textbook
1-based form is dropped; every Hermitian bilinear used here is insensitive
to it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

from .pauli import PauliString, PauliSum

Ladder = tuple[int, bool]  # (mode, is_creation)


@dataclass(frozen=True)
class FermionOperator:
    """Sum of coefficient-weighted products of ladder operators.

    ``terms`` is a tuple of ``(coeff, ((mode, dagger), ...))``; products are
    read left to right as written, e.g. ``((0, True), (1, False))`` is
    ``c_0^dagger c_1``.
    """

    terms: tuple[tuple[complex, tuple[Ladder, ...]], ...] = field(default_factory=tuple)

    @classmethod
    def term(cls, coeff: complex, *ops: Ladder) -> FermionOperator:
        return cls(((complex(coeff), tuple((int(m), bool(d)) for m, d in ops)),))

    @classmethod
    def create(cls, m: int) -> FermionOperator:
        return cls.term(1.0, (m, True))

    @classmethod
    def annihilate(cls, m: int) -> FermionOperator:
        return cls.term(1.0, (m, False))

    @classmethod
    def number(cls, m: int) -> FermionOperator:
        return cls.term(1.0, (m, True), (m, False))

    @classmethod
    def identity(cls, coeff: complex = 1.0) -> FermionOperator:
        return cls(((complex(coeff), ()),))

    def __add__(self, other: FermionOperator) -> FermionOperator:
        return FermionOperator(self.terms + other.terms)

    def __sub__(self, other: FermionOperator) -> FermionOperator:
        return self + (-1.0) * other

    def __rmul__(self, scalar: complex) -> FermionOperator:
        return FermionOperator(tuple((scalar * c, ops) for c, ops in self.terms))

    def __mul__(self, other: FermionOperator | complex) -> FermionOperator:
        if not isinstance(other, FermionOperator):
            return other * self
        return FermionOperator(
            tuple((ca * cb, oa + ob) for ca, oa in self.terms for cb, ob in other.terms)
        )

    def dagger(self) -> FermionOperator:
        return FermionOperator(
            tuple(
                (c.conjugate(), tuple((m, not d) for m, d in reversed(ops)))
                for c, ops in self.terms
            )
        )

    def max_mode(self) -> int:
        return max((m for _, ops in self.terms for m, _ in ops), default=-1)


@lru_cache(maxsize=None)
def _ladder_image(mode: int, dagger: bool, n_modes: int) -> PauliSum:
    z_string = (1 << mode) - 1
    x_bit = 1 << mode
    x_term = PauliString(n_modes, x_bit, z_string)
    y_term = PauliString(n_modes, x_bit, z_string | x_bit)
    sign = -1.0 if dagger else 1.0
    return PauliSum(n_modes, [(x_term, 0.5), (y_term, sign * 0.5j)])


def jordan_wigner(op: FermionOperator, n_modes: int) -> PauliSum:
    """Map a fermionic polynomial on ``n_modes`` modes to a Pauli sum."""
    if op.max_mode() >= n_modes:
        raise ValueError(f"mode index {op.max_mode()} out of range for {n_modes} modes")
    total: dict[PauliString, complex] = {}
    for coeff, ops in op.terms:
        if any(m < 0 for m, _ in ops):
            raise ValueError("mode indices must be non-negative")
        prod = PauliSum.identity(n_modes, coeff)
        for m, d in ops:
            prod = prod * _ladder_image(m, d, n_modes)
            if not prod:
                break
        for p, c in prod.items():
            total[p] = total.get(p, 0.0) + c
    return PauliSum(n_modes, total)


def anticommutator(a: FermionOperator, b: FermionOperator) -> FermionOperator:
    return a * b + b * a


def number_operator(n_modes: int, modes: list[int] | None = None) -> FermionOperator:
    modes = list(range(n_modes)) if modes is None else modes
    out = FermionOperator()
    for m in modes:
        out = out + FermionOperator.number(m)
    return out
