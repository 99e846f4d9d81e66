"""Plain-text Pauli-sum files.

Each body line is ``<re> <im> <pauli-string>`` (e.g. ``0.5 0.0 X0 Z3``; an
empty string is the identity).  Header lines look like ``# key: value``;
``n_qubits`` is required, other recognized keys are ``molecule``,
``geometry`` (space separated floats), ``n_electrons``,
``reference_energy`` and ``reference_targets``.  Unknown keys are kept
verbatim.  Files ending in ``.gz`` are read and written compressed.
"""

from __future__ import annotations

import gzip
import io
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

from .pauli import PauliString, PauliSum

HERMITIAN_TOL = 1e-10


class HamiltonianFileError(ValueError):
    """Malformed or inconsistent operator file."""

    def __init__(self, message: str, line: int | None = None, path: str | os.PathLike | None = None) -> None:
        where = ""
        if path is not None:
            where = f"{path}"
        if line is not None:
            where = f"{where}:{line}" if where else f"line {line}"
        super().__init__(f"{where}: {message}" if where else message)
        self.line = line
        self.path = path


@dataclass
class HamiltonianMetadata:
    n_qubits: int
    molecule: str | None = None
    geometry: tuple[float, ...] = ()
    n_electrons: int | None = None
    reference_energy: float | None = None
    reference_targets: tuple[float, ...] | None = None
    extra: dict[str, str] = field(default_factory=dict)

    def header_lines(self) -> list[str]:
        out = [f"# n_qubits: {self.n_qubits}"]
        if self.molecule is not None:
            out.append(f"# molecule: {self.molecule}")
        if self.geometry:
            out.append("# geometry: " + " ".join(repr(float(g)) for g in self.geometry))
        if self.n_electrons is not None:
            out.append(f"# n_electrons: {self.n_electrons}")
        for k, v in self.extra.items():
            out.append(f"# {k}: {v}")
        if self.reference_energy is not None:
            out.append(f"# reference_energy: {float(self.reference_energy)!r}")
        if self.reference_targets is not None:
            out.append("# reference_targets: " + " ".join(repr(float(t)) for t in self.reference_targets))
        return out


def _open_text(path: Path, mode: str):
    if path.suffix == ".gz":
        return io.TextIOWrapper(gzip.open(path, mode + "b"), encoding="utf-8")
    return open(path, mode, encoding="utf-8")


def _floats(value: str, key: str, lineno: int, path) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in value.split())
    except ValueError:
        raise HamiltonianFileError(f"header {key!r} must hold numbers, got {value!r}", lineno, path) from None


def _apply_header(meta: dict, key: str, value: str, lineno: int, path) -> None:
    if key == "n_qubits" or key == "n_electrons":
        try:
            meta[key] = int(value)
        except ValueError:
            raise HamiltonianFileError(f"header {key!r} must be an integer, got {value!r}", lineno, path) from None
    elif key == "geometry":
        meta[key] = _floats(value, key, lineno, path)
    elif key == "reference_energy":
        vals = _floats(value, key, lineno, path)
        if len(vals) != 1:
            raise HamiltonianFileError("reference_energy must be one number", lineno, path)
        meta[key] = vals[0]
    elif key == "reference_targets":
        vals = _floats(value, key, lineno, path)
        if len(vals) != 3:
            raise HamiltonianFileError("reference_targets must hold three numbers", lineno, path)
        meta[key] = vals
    elif key == "molecule":
        meta[key] = value
    else:
        meta.setdefault("extra", {})[key] = value


def parse_hamiltonian_text(
    text: str, path: str | os.PathLike | None = None, check_hermitian: bool = True
) -> tuple[PauliSum, HamiltonianMetadata]:
    meta: dict = {}
    body: list[tuple[int, complex, str]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            content = line[1:].strip()
            if ":" not in content:
                continue  # plain comment
            key, value = (s.strip() for s in content.split(":", 1))
            if body:
                raise HamiltonianFileError("header line after body", lineno, path)
            _apply_header(meta, key, value, lineno, path)
            continue
        parts = line.split(maxsplit=2)
        if len(parts) < 2:
            raise HamiltonianFileError(f"expected '<re> <im> <pauli-string>', got {raw!r}", lineno, path)
        try:
            coeff = complex(float(parts[0]), float(parts[1]))
        except ValueError:
            raise HamiltonianFileError(f"bad coefficient in {raw!r}", lineno, path) from None
        body.append((lineno, coeff, parts[2] if len(parts) == 3 else ""))
    if "n_qubits" not in meta:
        raise HamiltonianFileError("missing '# n_qubits:' header", None, path)
    n = meta["n_qubits"]
    if n < 1:
        raise HamiltonianFileError("n_qubits must be positive", None, path)
    acc: dict[PauliString, complex] = {}
    for lineno, coeff, word in body:
        try:
            p = PauliString.parse(word, n)
        except ValueError as exc:
            raise HamiltonianFileError(f"qubit-count mismatch or bad Pauli string: {exc}", lineno, path) from None
        acc[p] = acc.get(p, 0.0) + coeff
    op = PauliSum(n, list(acc.items()))
    if check_hermitian and not op.is_hermitian(HERMITIAN_TOL):
        raise HamiltonianFileError("operator is not Hermitian", None, path)
    return op, HamiltonianMetadata(**meta)


def parse_hamiltonian(path: str | os.PathLike, check_hermitian: bool = True) -> tuple[PauliSum, HamiltonianMetadata]:
    """Read an operator file; raises :class:`HamiltonianFileError` with the line number."""
    path = Path(path)
    with _open_text(path, "r") as fh:
        text = fh.read()
    return parse_hamiltonian_text(text, path, check_hermitian)


def format_hamiltonian(op: PauliSum, meta: HamiltonianMetadata) -> str:
    if meta.n_qubits != op.n_qubits:
        raise ValueError("metadata and operator disagree on n_qubits")
    lines = meta.header_lines()
    for p in sorted(op, key=lambda s: (s.x, s.z)):
        c = op.coefficient(p)
        lines.append(f"{float(c.real)!r} {float(c.imag)!r} {p.to_text()}".rstrip())
    return "\n".join(lines) + "\n"


def atomic_write_bytes(path: str | os.PathLike, data: bytes) -> None:
    """Write through a temporary file in the same directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path: str | os.PathLike, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


def write_hamiltonian(path: str | os.PathLike, op: PauliSum, meta: HamiltonianMetadata | None = None) -> None:
    meta = meta or HamiltonianMetadata(op.n_qubits)
    data = format_hamiltonian(op, meta).encode("utf-8")
    path = Path(path)
    if path.suffix == ".gz":
        data = gzip.compress(data, mtime=0)
    atomic_write_bytes(path, data)
