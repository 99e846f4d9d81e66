"""Pauli strings, Pauli sums and their exact algebra.

A :class:`PauliString` stores one letter per qubit in the symplectic
encoding: bit ``i`` of ``x`` and ``z`` holds qubit ``i``, with
``I=(0,0)``, ``X=(1,0)``, ``Z=(0,1)``, ``Y=(1,1)``.  A string therefore
denotes ``i**popcount(x & z) * X**x Z**z`` so that ``Y = iXZ``.

Text form lists the non-identity letters with their qubit index,
``"X0 Z3"``; the empty string is the identity.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping

DROP_TOL = 1e-12

_LETTER_BITS = {"I": (0, 0), "X": (1, 0), "Y": (1, 1), "Z": (0, 1)}
_BITS_LETTER = {bits: letter for letter, bits in _LETTER_BITS.items()}
_I_POWERS = (1, 1j, -1, -1j)


def _popcount(v: int) -> int:
    return bin(v).count("1")


@dataclass(frozen=True, order=True)
class PauliString:
    """An N-qubit Pauli word (without phase)."""

    n_qubits: int
    x: int = 0
    z: int = 0

    def __post_init__(self) -> None:
        if self.n_qubits < 1:
            raise ValueError("n_qubits must be positive")
        limit = 1 << self.n_qubits
        if not (0 <= self.x < limit and 0 <= self.z < limit):
            raise ValueError("Pauli masks exceed the qubit count")

    # -- construction -----------------------------------------------------
    @classmethod
    def identity(cls, n_qubits: int) -> PauliString:
        return cls(n_qubits)

    @classmethod
    def from_letters(cls, letters: str) -> PauliString:
        """Build from a dense word such as ``"XIZY"`` (qubit 0 first)."""
        x = z = 0
        for i, ch in enumerate(letters.upper()):
            try:
                bx, bz = _LETTER_BITS[ch]
            except KeyError:
                raise ValueError(f"invalid Pauli letter {ch!r}") from None
            x |= bx << i
            z |= bz << i
        return cls(len(letters), x, z)

    @classmethod
    def from_ops(cls, n_qubits: int, ops: Mapping[int, str] | Iterable[tuple[int, str]]) -> PauliString:
        items = ops.items() if isinstance(ops, Mapping) else ops
        x = z = 0
        for q, ch in items:
            if not 0 <= q < n_qubits:
                raise ValueError(f"qubit index {q} out of range for {n_qubits} qubits")
            bx, bz = _LETTER_BITS[ch.upper()]
            if (x >> q) & 1 or (z >> q) & 1:
                raise ValueError(f"qubit {q} given twice")
            x |= bx << q
            z |= bz << q
        return cls(n_qubits, x, z)

    @classmethod
    def parse(cls, text: str, n_qubits: int) -> PauliString:
        """Parse the sparse text form, e.g. ``"X0 Z3"``; ``""`` is identity."""
        ops = []
        for tok in text.split():
            letter, idx = tok[0], tok[1:]
            if letter.upper() not in "XYZ" or not idx.isdigit():
                raise ValueError(f"malformed Pauli token {tok!r}")
            ops.append((int(idx), letter))
        return cls.from_ops(n_qubits, ops)

    # -- inspection -------------------------------------------------------
    def letter(self, q: int) -> str:
        return _BITS_LETTER[((self.x >> q) & 1, (self.z >> q) & 1)]

    @property
    def letters(self) -> str:
        return "".join(self.letter(q) for q in range(self.n_qubits))

    def ops(self) -> list[tuple[int, str]]:
        return [(q, self.letter(q)) for q in range(self.n_qubits) if ((self.x | self.z) >> q) & 1]

    def is_identity(self) -> bool:
        return self.x == 0 and self.z == 0

    def to_text(self) -> str:
        return " ".join(f"{ch}{q}" for q, ch in self.ops())

    def __str__(self) -> str:
        return self.to_text() or "I"

    def __repr__(self) -> str:
        return f"PauliString({self.letters!r})"

    def __mul__(self, other: PauliString) -> tuple[complex, PauliString]:
        return multiply(self, other)


def support(p: PauliString) -> int:
    """Number of qubits on which ``p`` acts non-trivially."""
    return _popcount(p.x | p.z)


def multiply(a: PauliString, b: PauliString) -> tuple[complex, PauliString]:
    """Return ``(phase, product)`` with ``a @ b == phase * product``."""
    if a.n_qubits != b.n_qubits:
        raise ValueError(f"size mismatch: {a.n_qubits} vs {b.n_qubits} qubits")
    x = a.x ^ b.x
    z = a.z ^ b.z
    # Z^{z_a} X^{x_b} = (-1)^{z_a.x_b} X^{x_b} Z^{z_a}
    k = _popcount(a.x & a.z) + _popcount(b.x & b.z) - _popcount(x & z) + 2 * _popcount(a.z & b.x)
    return _I_POWERS[k % 4], PauliString(a.n_qubits, x, z)


def strings_commute(a: PauliString, b: PauliString) -> bool:
    return (_popcount(a.x & b.z) + _popcount(a.z & b.x)) % 2 == 0


class PauliSum:
    """Complex-weighted sum of Pauli strings on a fixed number of qubits.

    Terms whose coefficient magnitude falls below ``tol`` are dropped at
    construction, so every arithmetic result is already canonical.
    """

    __slots__ = ("n_qubits", "_terms")

    def __init__(
        self,
        n_qubits: int,
        terms: Mapping[PauliString, complex] | Iterable[tuple[PauliString, complex]] = (),
        tol: float = DROP_TOL,
    ) -> None:
        if n_qubits < 1:
            raise ValueError("n_qubits must be positive")
        acc: dict[PauliString, complex] = {}
        items = terms.items() if isinstance(terms, Mapping) else terms
        for p, c in items:
            if p.n_qubits != n_qubits:
                raise ValueError(f"term {p} has {p.n_qubits} qubits, expected {n_qubits}")
            acc[p] = acc.get(p, 0.0) + complex(c)
        self.n_qubits = n_qubits
        self._terms = {p: c for p, c in acc.items() if abs(c) >= tol}

    @classmethod
    def from_string(cls, p: PauliString, coeff: complex = 1.0) -> PauliSum:
        return cls(p.n_qubits, [(p, coeff)])

    @classmethod
    def identity(cls, n_qubits: int, coeff: complex = 1.0) -> PauliSum:
        return cls(n_qubits, [(PauliString(n_qubits), coeff)])

    @classmethod
    def from_text(cls, n_qubits: int, pairs: Iterable[tuple[complex, str]]) -> PauliSum:
        """Convenience: ``PauliSum.from_text(2, [(1.0, "Z0 Z1"), (0.5, "X1")])``."""
        return cls(n_qubits, [(PauliString.parse(t, n_qubits), c) for c, t in pairs])

    @property
    def terms(self) -> Mapping[PauliString, complex]:
        return dict(self._terms)

    def items(self) -> Iterator[tuple[PauliString, complex]]:
        return iter(self._terms.items())

    def coefficient(self, p: PauliString) -> complex:
        return self._terms.get(p, 0.0)

    def __len__(self) -> int:
        return len(self._terms)

    def __iter__(self) -> Iterator[PauliString]:
        return iter(self._terms)

    def __bool__(self) -> bool:
        return bool(self._terms)

    def is_hermitian(self, tol: float = 1e-10) -> bool:
        return all(abs(c.imag) <= tol for c in self._terms.values())

    def real_part(self) -> PauliSum:
        return PauliSum(self.n_qubits, {p: c.real for p, c in self._terms.items()})

    def _check(self, other: PauliSum) -> None:
        if other.n_qubits != self.n_qubits:
            raise ValueError(f"size mismatch: {self.n_qubits} vs {other.n_qubits} qubits")

    def __add__(self, other: PauliSum) -> PauliSum:
        self._check(other)
        return PauliSum(self.n_qubits, list(self._terms.items()) + list(other._terms.items()))

    def __sub__(self, other: PauliSum) -> PauliSum:
        return self + (-1.0) * other

    def __neg__(self) -> PauliSum:
        return (-1.0) * self

    def __rmul__(self, scalar: complex) -> PauliSum:
        return PauliSum(self.n_qubits, {p: scalar * c for p, c in self._terms.items()})

    def __mul__(self, other: PauliSum | complex) -> PauliSum:
        if not isinstance(other, PauliSum):
            return other * self
        self._check(other)
        acc: dict[PauliString, complex] = {}
        for pa, ca in self._terms.items():
            for pb, cb in other._terms.items():
                phase, prod = multiply(pa, pb)
                acc[prod] = acc.get(prod, 0.0) + phase * ca * cb
        return PauliSum(self.n_qubits, acc)

    __matmul__ = __mul__

    def dagger(self) -> PauliSum:
        return PauliSum(self.n_qubits, {p: c.conjugate() for p, c in self._terms.items()})

    def equals(self, other: PauliSum, tol: float = 1e-10) -> bool:
        if other.n_qubits != self.n_qubits:
            return False
        diff = self - other
        return all(abs(c) <= tol for c in diff._terms.values())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PauliSum):
            return NotImplemented
        return self.n_qubits == other.n_qubits and self._terms == other._terms

    def __hash__(self) -> int:
        return hash((self.n_qubits, frozenset(self._terms.items())))

    def __repr__(self) -> str:
        body = " + ".join(f"({c:.6g})*[{p}]" for p, c in sorted(self._terms.items()))
        return f"PauliSum({self.n_qubits}, {body or '0'})"


def commutator(a: PauliSum, b: PauliSum) -> PauliSum:
    """``AB - BA``; only anticommuting string pairs contribute ``2 AB``."""
    if a.n_qubits != b.n_qubits:
        raise ValueError(f"size mismatch: {a.n_qubits} vs {b.n_qubits} qubits")
    acc: dict[PauliString, complex] = {}
    for pa, ca in a.items():
        for pb, cb in b.items():
            if strings_commute(pa, pb):
                continue
            phase, prod = multiply(pa, pb)
            acc[prod] = acc.get(prod, 0.0) + 2.0 * phase * ca * cb
    return PauliSum(a.n_qubits, acc)


def heisenberg_expand(h: PauliSum, p: PauliString, t: float, order: int) -> PauliSum:
    """Truncated series of ``exp(iHt) P exp(-iHt)``.

    Uses the nested-commutator expansion
    ``sum_k (i t)^k / k! [H, [H, ... [H, P]]]`` up to and including ``t**order``.
    """
    if order < 0:
        raise ValueError("order must be non-negative")
    if h.n_qubits != p.n_qubits:
        raise ValueError(f"size mismatch: {h.n_qubits} vs {p.n_qubits} qubits")
    term = PauliSum.from_string(p)
    total = term
    for k in range(1, order + 1):
        term = (1j * t / k) * commutator(h, term)
        total = total + term
    return total


def support_histogram(op: PauliSum) -> dict[int, int]:
    """Count of strings in ``op`` by support size."""
    return dict(sorted(Counter(support(p) for p in op).items()))


def pauli_word_matrix_phase(p: PauliString) -> complex:
    """Phase ``i**popcount(x & z)`` relating ``p`` to ``X**x Z**z``."""
    return _I_POWERS[_popcount(p.x & p.z) % 4]


def max_abs_coefficient(op: PauliSum) -> float:
    return max((abs(c) for _, c in op.items()), default=0.0)


def norm1(op: PauliSum) -> float:
    return math.fsum(abs(c) for _, c in op.items())
