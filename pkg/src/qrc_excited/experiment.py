"""Datasets, the end-to-end experiment runner and the VQE shot sweep."""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import io
import json
import logging
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .hamiltonian_io import HamiltonianFileError, HamiltonianMetadata, atomic_write_text, parse_hamiltonian, write_hamiltonian
from .learner import RegressionModel, ScalingParams, fit_scaling, per_target_mae, train_model
from .noise import NoiseSpec
from .pauli import PauliSum
from .reservoir import ReservoirSpec, extract_features_noiseless, extract_features_noisy, sample_reservoir
from .statevector import SectorFilter, StateVector, to_matrix
from .targets import TARGET_NAMES, analyze_spectrum
from .vqe import VqeConfig, build_uccsd_ansatz, vqe_optimize

log = logging.getLogger(__name__)

DEFAULT_SPLITS = {"LiH": (30, 50), "H4-line": (30, 50), "H4-rect": (250, 1250)}
BUNDLED = ("lih", "lih_1p5", "h4_line", "h4_rect")

# independent RNG stream ids under the master seed
_STREAM_VQE = 1
_STREAM_FEATURES = 2
_STREAM_AUGMENT = 3


class ConfigError(ValueError):
    """Invalid manifest or experiment configuration."""


class DatasetError(RuntimeError):
    """A dataset entry failed numerically; ``index`` and ``r`` identify it."""

    def __init__(self, index: int, r: Sequence[float], cause: BaseException) -> None:
        super().__init__(f"entry {index} (r={list(r)}): {cause}")
        self.index = index
        self.r = tuple(r)
        self.cause = cause


def bundled_manifest(name: str) -> Path:
    """Path to the manifest of a fixture set shipped with the package."""
    if name not in BUNDLED:
        raise ConfigError(f"unknown bundled fixture set {name!r}; choose from {BUNDLED}")
    return Path(str(resources.files("qrc_excited") / "fixtures" / name / "manifest.json"))


def _resolve_manifest_path(spec: str, base: Path | None = None) -> Path:
    if spec.startswith("bundled:"):
        return bundled_manifest(spec.split(":", 1)[1])
    p = Path(spec)
    if not p.is_absolute() and base is not None:
        p = base / p
    return p


@dataclass(frozen=True)
class ManifestEntry:
    r: tuple[float, ...]
    hamiltonian: Path
    dipole: tuple[Path, ...]


@dataclass
class DatasetManifest:
    """Geometries with their operator files and the train/test split settings."""

    name: str
    molecule: str
    n_qubits: int
    n_electrons: int
    entries: list[ManifestEntry]
    split_seed: int
    n_train: int
    n_test: int
    geometry_sampling: dict[str, Any] = field(default_factory=dict)
    path: Path | None = None

    def __post_init__(self) -> None:
        if not self.entries:
            raise ConfigError("manifest has no entries")
        if self.n_train < 1 or self.n_test < 0:
            raise ConfigError("split sizes must be n_train >= 1 and n_test >= 0")
        if self.n_train + self.n_test > len(self.entries):
            raise ConfigError(
                f"split {self.n_train}+{self.n_test} exceeds the {len(self.entries)} manifest entries"
            )
        if not 0 <= self.n_electrons <= self.n_qubits:
            raise ConfigError("invalid electron count")

    @property
    def sector(self) -> SectorFilter:
        """Neutral sector at minimal ``|S_z|``.

        Every spin multiplet keeps one member here, so the distinct levels
        match the full fixed-``N`` block, while a triplet ground state (near
        square H4) does not show up as a degenerate ground level.
        """
        return SectorFilter(particle_number=self.n_electrons, sz_twice=self.n_electrons % 2)

    def split(self) -> tuple[np.ndarray, np.ndarray]:
        """Deterministic random split by ``split_seed``."""
        perm = np.random.default_rng(self.split_seed).permutation(len(self.entries))
        return np.sort(perm[: self.n_train]), np.sort(perm[self.n_train : self.n_train + self.n_test])

    def check_files(self) -> None:
        for e in self.entries:
            for p in (e.hamiltonian, *e.dipole):
                if not p.is_file():
                    raise ConfigError(f"manifest references missing file {p}")

    @classmethod
    def load(cls, path: str | Path, n_train: int | None = None, n_test: int | None = None) -> DatasetManifest:
        path = _resolve_manifest_path(str(path))
        try:
            raw = json.loads(path.read_text())
        except FileNotFoundError:
            raise ConfigError(f"manifest {path} not found") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"manifest {path} is not valid JSON: {exc}") from None
        root = path.parent
        try:
            entries = [
                ManifestEntry(
                    tuple(float(x) for x in e["r"]),
                    root / e["hamiltonian"],
                    tuple(root / d for d in e.get("dipole", [])),
                )
                for e in raw["entries"]
            ]
            default = DEFAULT_SPLITS.get(raw.get("molecule"), (None, None))
            out = cls(
                name=raw.get("name", path.parent.name),
                molecule=raw.get("molecule", "unknown"),
                n_qubits=int(raw["n_qubits"]),
                n_electrons=int(raw["n_electrons"]),
                entries=entries,
                split_seed=int(raw["split_seed"]),
                n_train=int(n_train if n_train is not None else raw.get("n_train", default[0])),
                n_test=int(n_test if n_test is not None else raw.get("n_test", default[1])),
                geometry_sampling=raw.get("geometry_sampling", {}),
                path=path,
            )
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"manifest {path} is missing field {exc}") from None
        return out

    def to_dict(self, root: Path | None = None) -> dict[str, Any]:
        root = root or (self.path.parent if self.path else Path("."))

        def rel(p: Path) -> str:
            try:
                return str(p.relative_to(root))
            except ValueError:
                return str(p)

        return {
            "name": self.name,
            "molecule": self.molecule,
            "n_qubits": self.n_qubits,
            "n_electrons": self.n_electrons,
            "geometry_sampling": self.geometry_sampling,
            "split_seed": self.split_seed,
            "n_train": self.n_train,
            "n_test": self.n_test,
            "entries": [
                {"r": list(e.r), "hamiltonian": rel(e.hamiltonian), "dipole": [rel(d) for d in e.dipole]}
                for e in self.entries
            ],
        }

    def save(self, path: str | Path) -> None:
        path = Path(path)
        atomic_write_text(path, json.dumps(self.to_dict(path.parent), indent=1) + "\n")


def write_hubbard_manifest(
    out_dir: str | Path,
    u_values: Sequence[float],
    n_train: int,
    n_test: int,
    split_seed: int = 0,
) -> Path:
    """Write two-site Hubbard operator files and a manifest; geometry ``r`` is ``U``."""
    from .hubbard import N_QUBITS, dipole_operator, hubbard_hamiltonian

    out = Path(out_dir)
    dip = dipole_operator()
    entries = []
    for i, u in enumerate(u_values):
        _, h = hubbard_hamiltonian(u)
        meta = HamiltonianMetadata(N_QUBITS, "Hubbard-2", (float(u),), 2)
        write_hamiltonian(out / f"u{i:04d}.ham", h, meta)
        write_hamiltonian(out / f"u{i:04d}.dip", dip, HamiltonianMetadata(N_QUBITS, "Hubbard-2", (float(u),), 2))
        entries.append(ManifestEntry((float(u),), out / f"u{i:04d}.ham", (out / f"u{i:04d}.dip",)))
    manifest = DatasetManifest("hubbard", "Hubbard-2", N_QUBITS, 2, entries, split_seed, n_train, n_test)
    path = out / "manifest.json"
    manifest.save(path)
    return path


@dataclass(frozen=True)
class ExperimentConfig:
    """Every knob of one run; ``ground_state=None`` means exact when noiseless, VQE when noisy."""

    manifest: str
    mode: str = "noiseless"
    ground_state: str | None = None
    reservoir_seed: int = 0
    reservoir_overrides: dict[str, float] = field(default_factory=dict)
    noise_p: float = 0.01
    feature_shots: int = 10**6
    vqe_optimizer: str | None = None
    vqe_max_iterations: int = 400
    vqe_shots: int | None = 10**4
    vqe_damping: str = "none"
    vqe_init_perturbation: float = 0.0
    ridge: bool | None = None
    alpha: float = 1e-3
    copies: int = 100
    sigma: float = 2e-3
    standardize_features: bool = False
    ablation: bool = False
    n_train: int | None = None
    n_test: int | None = None
    output_dir: str | None = None
    master_seed: int = 0

    def __post_init__(self) -> None:
        if self.mode not in ("noiseless", "noisy"):
            raise ConfigError(f"mode must be 'noiseless' or 'noisy', got {self.mode!r}")
        if self.ground_state not in (None, "exact", "vqe"):
            raise ConfigError(f"ground_state must be 'exact' or 'vqe', got {self.ground_state!r}")
        if self.vqe_optimizer not in (None, "nelder_mead", "spsa"):
            raise ConfigError(f"unknown VQE optimizer {self.vqe_optimizer!r}")
        if self.vqe_damping not in ("none", "single_qubit", "all"):
            raise ConfigError(f"unknown VQE damping {self.vqe_damping!r}")
        if not 0 <= self.noise_p <= 0.75:
            raise ConfigError("noise_p must lie in [0, 3/4]")
        if self.feature_shots < 1 or (self.vqe_shots is not None and self.vqe_shots < 1):
            raise ConfigError("shot counts must be positive")
        if self.vqe_max_iterations < 1:
            raise ConfigError("vqe_max_iterations must be positive")
        if self.alpha < 0 or self.copies < 1 or self.sigma < 0:
            raise ConfigError("invalid learner settings")
        unknown = set(self.reservoir_overrides) - {"T", "J_mean", "J_std", "h_mean", "h_std"}
        if unknown:
            raise ConfigError(f"unknown reservoir overrides {sorted(unknown)}")

    @property
    def resolved_ground_state(self) -> str:
        if self.ground_state is not None:
            return self.ground_state
        return "vqe" if self.mode == "noisy" else "exact"

    @property
    def use_ridge(self) -> bool:
        return self.mode == "noisy" if self.ridge is None else self.ridge

    def vqe_config(self, seed: int) -> VqeConfig:
        noisy = self.mode == "noisy"
        optimizer = self.vqe_optimizer or ("spsa" if noisy and self.vqe_shots else "nelder_mead")
        return VqeConfig(
            optimizer=optimizer,
            max_iterations=self.vqe_max_iterations if optimizer == "spsa" else max(self.vqe_max_iterations, 2000),
            shots=self.vqe_shots if noisy else None,
            noise=NoiseSpec(self.noise_p, self.vqe_shots or 1) if noisy else None,
            damping=self.vqe_damping,
            seed=seed,
            init_perturbation=self.vqe_init_perturbation,
        )

    def replace(self, **changes: Any) -> ExperimentConfig:
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)

    def digest(self) -> str:
        return hashlib.sha256(json.dumps(self.to_dict(), sort_keys=True).encode()).hexdigest()[:16]

    @classmethod
    def from_dict(cls, raw: dict[str, Any]) -> ExperimentConfig:
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(raw) - names
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}")
        if "manifest" not in raw:
            raise ConfigError("config requires 'manifest'")
        try:
            return cls(**raw)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def load(cls, path: str | Path) -> ExperimentConfig:
        path = Path(path)
        try:
            raw = json.loads(path.read_text())
        except FileNotFoundError:
            raise ConfigError(f"config {path} not found") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
        m = raw.get("manifest")
        if isinstance(m, str) and not m.startswith("bundled:") and not Path(m).is_absolute():
            raw["manifest"] = str(path.parent / m)
        return cls.from_dict(raw)

    def load_manifest(self) -> DatasetManifest:
        manifest = DatasetManifest.load(self.manifest, self.n_train, self.n_test)
        manifest.check_files()
        return manifest


def _seed(master: int, stream: int, index: int | None = None) -> np.random.SeedSequence:
    key = [master, stream] if index is None else [master, stream, index]
    return np.random.SeedSequence(key)


@dataclass
class GroundStates:
    """Per-geometry ground states and exact targets; independent of the reservoir."""

    r: np.ndarray
    targets: np.ndarray
    exact_energies: np.ndarray
    states: np.ndarray
    source: str
    vqe_energies: np.ndarray | None = None
    vqe_state_energies: np.ndarray | None = None
    vqe_traces: list[list[dict]] | None = None

    def vqe_summary(self) -> dict[str, float] | None:
        if self.vqe_energies is None:
            return None
        return {
            "energy_mae": float(np.mean(np.abs(self.vqe_energies - self.exact_energies))),
            "state_energy_mae": float(np.mean(np.abs(self.vqe_state_energies - self.exact_energies))),
        }


def load_entry(entry: ManifestEntry, n_qubits: int) -> tuple[PauliSum, list[PauliSum], HamiltonianMetadata]:
    h, meta = parse_hamiltonian(entry.hamiltonian)
    if h.n_qubits != n_qubits:
        raise HamiltonianFileError(f"expected {n_qubits} qubits, file has {h.n_qubits}", path=entry.hamiltonian)
    dips = [parse_hamiltonian(d)[0] for d in entry.dipole]
    if any(d.n_qubits != n_qubits for d in dips):
        raise HamiltonianFileError("dipole operator has the wrong qubit count", path=entry.hamiltonian)
    return h, dips, meta


def prepare_ground_states(manifest: DatasetManifest, config: ExperimentConfig) -> GroundStates:
    """Targets by exact diagonalization plus the configured ground-state source."""
    source = config.resolved_ground_state
    n = len(manifest.entries)
    r = np.array([e.r for e in manifest.entries], dtype=float)
    targets = np.empty((n, 3))
    exact = np.empty(n)
    states = np.empty((n, 1 << manifest.n_qubits), dtype=complex)
    vqe_e = np.empty(n) if source == "vqe" else None
    vqe_se = np.empty(n) if source == "vqe" else None
    traces: list[list[dict]] | None = [] if source == "vqe" else None
    ansatz = build_uccsd_ansatz(manifest.n_qubits, manifest.n_electrons) if source == "vqe" else None
    for i, entry in enumerate(manifest.entries):
        h, dips, _ = load_entry(entry, manifest.n_qubits)
        try:
            summary = analyze_spectrum(h, dips, manifest.sector)
            targets[i] = summary.targets.as_array()
            exact[i] = summary.ground_energy
            if source == "exact":
                states[i] = summary.ground_state.amplitudes
            else:
                seed = int(_seed(config.master_seed, _STREAM_VQE, i).generate_state(1)[0])
                res = vqe_optimize(h, ansatz, config.vqe_config(seed))
                psi = ansatz.prepare_array(res.theta)
                states[i] = psi
                vqe_e[i] = res.energy
                vqe_se[i] = float(np.vdot(psi, to_matrix(h) @ psi).real)
                traces.append(res.trace_dicts())
        except (ArithmeticError, np.linalg.LinAlgError, RuntimeError, ValueError) as exc:
            raise DatasetError(i, entry.r, exc) from exc
    return GroundStates(r, targets, exact, states, source, vqe_e, vqe_se, traces)


def reservoir_for(manifest: DatasetManifest, config: ExperimentConfig) -> ReservoirSpec:
    return sample_reservoir(manifest.n_qubits, seed=config.reservoir_seed, **config.reservoir_overrides)


def compute_features(
    ground: GroundStates, spec: ReservoirSpec, config: ExperimentConfig
) -> np.ndarray:
    out = np.empty((ground.states.shape[0], 3 * spec.n_qubits))
    for i, amps in enumerate(ground.states):
        state = StateVector.from_array(amps, normalize=True)
        if config.mode == "noisy":
            seed = _seed(config.master_seed, _STREAM_FEATURES, i)
            fv = extract_features_noisy(state, spec, p=config.noise_p, shots=config.feature_shots, rng_seed=seed)
        else:
            fv = extract_features_noiseless(state, spec)
        out[i] = fv.values
    return out


@dataclass
class Dataset:
    manifest: DatasetManifest
    ground: GroundStates
    reservoir: ReservoirSpec
    features: np.ndarray
    train_idx: np.ndarray
    test_idx: np.ndarray
    scaling: ScalingParams

    @property
    def targets(self) -> np.ndarray:
        return self.ground.targets

    @property
    def scaled_targets(self) -> np.ndarray:
        return self.scaling.apply(self.targets)

    def with_reservoir(self, spec: ReservoirSpec, config: ExperimentConfig) -> Dataset:
        return dataclasses.replace(self, reservoir=spec, features=compute_features(self.ground, spec, config))

    def digest(self) -> str:
        h = hashlib.sha256()
        for a in (self.features, self.targets, self.train_idx, self.test_idx, self.ground.states):
            h.update(np.ascontiguousarray(a).tobytes())
        return h.hexdigest()

    def save(self, path: str | Path) -> None:
        buf = io.BytesIO()
        arrays = {
            "r": self.ground.r,
            "features": self.features,
            "targets": self.targets,
            "states": self.ground.states,
            "exact_energies": self.ground.exact_energies,
            "train_idx": self.train_idx,
            "test_idx": self.test_idx,
            "y_min": self.scaling.y_min,
            "y_max": self.scaling.y_max,
        }
        if self.ground.vqe_energies is not None:
            arrays["vqe_energies"] = self.ground.vqe_energies
            arrays["vqe_state_energies"] = self.ground.vqe_state_energies
        np.savez(buf, **arrays)
        from .hamiltonian_io import atomic_write_bytes

        atomic_write_bytes(path, buf.getvalue())
        meta = {
            "manifest": str(self.manifest.path) if self.manifest.path else None,
            "source": self.ground.source,
            "reservoir": self.reservoir.to_dict(),
            "digest": self.digest(),
        }
        atomic_write_text(Path(str(path) + ".json"), json.dumps(meta, indent=1, sort_keys=True) + "\n")

    @classmethod
    def load(cls, path: str | Path, manifest: DatasetManifest) -> Dataset:
        path = Path(path)
        with np.load(path) as z:
            a = {k: z[k] for k in z.files}
        meta = json.loads(Path(str(path) + ".json").read_text())
        rd = meta["reservoir"]
        spec = ReservoirSpec(
            n_qubits=rd["n_qubits"],
            J=tuple(tuple(row) for row in rd["J"]),
            h=tuple(rd["h"]),
            T=rd["T"],
            seed=rd["seed"],
            J_mean=rd["J_mean"],
            J_std=rd["J_std"],
            h_mean=rd["h_mean"],
            h_std=rd["h_std"],
        )
        ground = GroundStates(
            a["r"], a["targets"], a["exact_energies"], a["states"], meta["source"],
            a.get("vqe_energies"), a.get("vqe_state_energies"),
        )
        return cls(manifest, ground, spec, a["features"], a["train_idx"], a["test_idx"], ScalingParams(a["y_min"], a["y_max"]))


def build_dataset(
    manifest: DatasetManifest, config: ExperimentConfig, ground: GroundStates | None = None
) -> Dataset:
    """Ground states, features and exact targets for every manifest entry.

    ``ground`` may be passed in to reuse states across reservoir seeds.
    Scaling is fitted on the training rows only.
    """
    if ground is None:
        ground = prepare_ground_states(manifest, config)
    spec = reservoir_for(manifest, config)
    features = compute_features(ground, spec, config)
    train, test = manifest.split()
    scaling = fit_scaling(ground.targets[train])
    return Dataset(manifest, ground, spec, features, train, test, scaling)


def train(dataset: Dataset, config: ExperimentConfig) -> RegressionModel:
    x = dataset.features[dataset.train_idx]
    y = dataset.scaled_targets[dataset.train_idx]
    rng = np.random.default_rng(_seed(config.master_seed, _STREAM_AUGMENT))
    return train_model(
        x,
        y,
        ridge=config.use_ridge,
        alpha=config.alpha,
        copies=config.copies,
        sigma=config.sigma,
        standardize_features=config.standardize_features,
        rng=rng,
        scaling=dataset.scaling,
    )


def _metrics(dataset: Dataset, pred_scaled: np.ndarray) -> dict[str, Any]:
    ys = dataset.scaled_targets
    y = dataset.targets
    pred = dataset.scaling.invert(pred_scaled)
    out: dict[str, Any] = {}
    for split, idx in (("train", dataset.train_idx), ("test", dataset.test_idx)):
        if idx.size == 0:
            continue
        m = per_target_mae(pred[idx], y[idx])
        ms = per_target_mae(pred_scaled[idx], ys[idx])
        out[split] = {
            "mae": dict(zip(TARGET_NAMES, map(float, m))),
            "scaled_mae": dict(zip(TARGET_NAMES, map(float, ms))),
            "mean_scaled_mae": float(np.mean(ms)),
        }
    return out


@dataclass
class Evaluation:
    name: str
    predictions_scaled: np.ndarray
    predictions: np.ndarray
    metrics: dict[str, Any]


def evaluate(dataset: Dataset, model: RegressionModel, name: str = "with_entangler") -> Evaluation:
    ps = model.predict_scaled(dataset.features)
    return Evaluation(name, ps, dataset.scaling.invert(ps), _metrics(dataset, ps))


def random_guess(dataset: Dataset) -> Evaluation:
    """Predict the training mean of every scaled target."""
    mean = dataset.scaled_targets[dataset.train_idx].mean(axis=0)
    ps = np.tile(mean, (dataset.targets.shape[0], 1))
    return Evaluation("random_guess", ps, dataset.scaling.invert(ps), _metrics(dataset, ps))


@dataclass
class Report:
    config: ExperimentConfig
    dataset: Dataset
    model: RegressionModel
    evaluations: dict[str, Evaluation]
    vqe: dict[str, float] | None = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "config": self.config.to_dict(),
            "config_hash": self.config.digest(),
            "seeds": {
                "master_seed": self.config.master_seed,
                "reservoir_seed": self.config.reservoir_seed,
                "split_seed": self.dataset.manifest.split_seed,
            },
            "manifest": self.dataset.manifest.name,
            "ground_state": self.dataset.ground.source,
            "n_train": int(self.dataset.train_idx.size),
            "n_test": int(self.dataset.test_idx.size),
            "reservoir": self.dataset.reservoir.to_dict(),
            "model": self.model.to_dict(),
            "metrics": {k: e.metrics for k, e in self.evaluations.items()},
            "vqe": self.vqe,
        }

    def test_mae(self, target: str, name: str = "with_entangler") -> float:
        return self.evaluations[name].metrics["test"]["mae"][target]

    def mean_scaled_test_mae(self, name: str = "with_entangler") -> float:
        return self.evaluations[name].metrics["test"]["mean_scaled_mae"]


def run_experiment(config: ExperimentConfig, ground: GroundStates | None = None, write: bool = True) -> Report:
    manifest = config.load_manifest()
    dataset = build_dataset(manifest, config, ground)
    model = train(dataset, config)
    evals = {"with_entangler": evaluate(dataset, model)}
    if config.ablation:
        off = dataset.with_reservoir(dataset.reservoir.with_time(0.0), config)
        evals["without_entangler"] = evaluate(off, train(off, config), "without_entangler")
    evals["random_guess"] = random_guess(dataset)
    report = Report(config, dataset, model, evals, dataset.ground.vqe_summary())
    if write and config.output_dir:
        write_report(report, Path(config.output_dir))
    return report


def _fmt(x: float) -> str:
    return repr(float(x))


def predictions_csv(dataset: Dataset, evaluation: Evaluation) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["index", "split", "r", "target", "truth", "prediction", "abs_error", "scaled_truth", "scaled_prediction"])
    split = np.full(dataset.targets.shape[0], "", dtype=object)
    split[dataset.train_idx] = "train"
    split[dataset.test_idx] = "test"
    ys = dataset.scaled_targets
    for i in np.concatenate([dataset.train_idx, dataset.test_idx]):
        r = ";".join(_fmt(v) for v in dataset.ground.r[i])
        for k, name in enumerate(TARGET_NAMES):
            t, p = dataset.targets[i, k], evaluation.predictions[i, k]
            w.writerow([int(i), split[i], r, name, _fmt(t), _fmt(p), _fmt(abs(p - t)), _fmt(ys[i, k]), _fmt(evaluation.predictions_scaled[i, k])])
    return buf.getvalue()


def plot_data(dataset: Dataset, evaluation: Evaluation, k: int) -> str:
    """Whitespace-separated columns, sorted by geometry, for prediction/error plots."""
    d = dataset.ground.r.shape[1]
    rcols = " ".join(f"r{j}" for j in range(d)) if d > 1 else "r"
    lines = [f"# {TARGET_NAMES[k]} ({evaluation.name})", f"# {rcols} truth prediction abs_error is_test"]
    test = set(dataset.test_idx.tolist())
    idx = np.concatenate([dataset.train_idx, dataset.test_idx])
    order = sorted(idx.tolist(), key=lambda i: tuple(dataset.ground.r[i]))
    for i in order:
        t, p = dataset.targets[i, k], evaluation.predictions[i, k]
        cols = [*(_fmt(v) for v in dataset.ground.r[i]), _fmt(t), _fmt(p), _fmt(abs(p - t)), str(int(i in test))]
        lines.append(" ".join(cols))
    return "\n".join(lines) + "\n"


def write_report(report: Report, out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    atomic_write_text(out_dir / "config.resolved.json", json.dumps(report.config.to_dict(), indent=1, sort_keys=True) + "\n")
    atomic_write_text(out_dir / "metrics.json", json.dumps(report.to_dict(), indent=1, sort_keys=True) + "\n")
    for name, ev in report.evaluations.items():
        suffix = "" if name == "with_entangler" else f"_{name}"
        atomic_write_text(out_dir / f"predictions{suffix}.csv", predictions_csv(report.dataset, ev))
        if name == "random_guess":
            continue
        for k, t in enumerate(TARGET_NAMES):
            atomic_write_text(out_dir / f"plot_{t}{suffix}.dat", plot_data(report.dataset, ev, k))
    if report.dataset.ground.vqe_traces:
        atomic_write_text(out_dir / "vqe_traces.json", json.dumps(report.dataset.ground.vqe_traces) + "\n")


@dataclass
class SweepPoint:
    shots: int
    vqe_energy_mae: float
    vqe_state_energy_mae: float
    test_mae_delta_e1: float

    def to_dict(self) -> dict[str, float]:
        return dataclasses.asdict(self)


def sweep_shots(config: ExperimentConfig, shot_list: Sequence[int], write: bool = True) -> list[SweepPoint]:
    """Rerun the noisy VQE pipeline for each VQE shot count."""
    if not shot_list:
        raise ConfigError("empty shot list")
    if config.mode != "noisy" or config.resolved_ground_state != "vqe":
        raise ConfigError("the shot sweep needs mode 'noisy' with VQE ground states")
    points = []
    for shots in shot_list:
        sub = config.replace(vqe_shots=int(shots), output_dir=None)
        rep = run_experiment(sub, write=False)
        points.append(SweepPoint(int(shots), rep.vqe["energy_mae"], rep.vqe["state_energy_mae"], rep.test_mae("delta_e1")))
        log.info("shots=%d vqe_mae=%.5f dE1_mae=%.5f", shots, points[-1].vqe_energy_mae, points[-1].test_mae_delta_e1)
    if write and config.output_dir:
        out = Path(config.output_dir)
        atomic_write_text(out / "config.resolved.json", json.dumps(config.to_dict(), indent=1, sort_keys=True) + "\n")
        atomic_write_text(out / "sweep.json", json.dumps([p.to_dict() for p in points], indent=1) + "\n")
        lines = ["# shots vqe_energy_mae vqe_state_energy_mae test_mae_delta_e1"]
        lines += [f"{p.shots} {_fmt(p.vqe_energy_mae)} {_fmt(p.vqe_state_energy_mae)} {_fmt(p.test_mae_delta_e1)}" for p in points]
        atomic_write_text(out / "sweep.dat", "\n".join(lines) + "\n")
    return points
