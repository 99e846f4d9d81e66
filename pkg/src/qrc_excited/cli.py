"""Command-line entry point.

Exit codes: 0 success, 1 validation error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .experiment import (
    ConfigError,
    Dataset,
    DatasetError,
    ExperimentConfig,
    evaluate,
    random_guess,
    run_experiment,
    sweep_shots,
    train,
    write_report,
    Report,
    build_dataset,
)
from .hamiltonian_io import HamiltonianFileError, atomic_write_text, parse_hamiltonian
from .learner import RegressionModel
from .statevector import SectorFilter, exact_eigensystem
from .targets import TargetError

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_NUMERICAL = 2

log = logging.getLogger("qrc_excited")


def _bool(text: str) -> bool:
    low = text.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {text!r}")


def _optional(conv):
    def parse(text: str):
        return None if text.lower() in ("none", "auto", "") else conv(text)

    return parse


# flag parsers for ExperimentConfig fields
_FIELD_TYPES: dict[str, Any] = {
    "manifest": str,
    "mode": str,
    "ground_state": _optional(str),
    "reservoir_seed": int,
    "reservoir_overrides": json.loads,
    "noise_p": float,
    "feature_shots": int,
    "vqe_optimizer": _optional(str),
    "vqe_max_iterations": int,
    "vqe_shots": _optional(int),
    "vqe_damping": str,
    "vqe_init_perturbation": float,
    "ridge": _optional(_bool),
    "alpha": float,
    "copies": int,
    "sigma": float,
    "standardize_features": _bool,
    "ablation": _bool,
    "n_train": _optional(int),
    "n_test": _optional(int),
    "output_dir": _optional(str),
    "master_seed": int,
}


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON experiment config; flags below override its values")
    for f in dataclasses.fields(ExperimentConfig):
        p.add_argument(f"--{f.name.replace('_', '-')}", dest=f.name, type=_FIELD_TYPES[f.name], default=None)


def _config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    raw: dict[str, Any] = {}
    if args.config:
        raw = ExperimentConfig.load(args.config).to_dict()
    for f in dataclasses.fields(ExperimentConfig):
        v = getattr(args, f.name, None)
        if v is not None:
            raw[f.name] = v
    return ExperimentConfig.from_dict(raw)


def _print_json(obj: Any) -> None:
    print(json.dumps(obj, indent=1, sort_keys=True))


def cmd_hamiltonian_validate(args: argparse.Namespace) -> int:
    op, meta = parse_hamiltonian(args.path)
    info: dict[str, Any] = {"path": str(args.path), "n_qubits": op.n_qubits, "n_terms": len(op), "hermitian": True}
    n_el = args.electrons if args.electrons is not None else meta.n_electrons
    if n_el is not None and op.n_qubits <= 12 and len(op):
        sector = SectorFilter(particle_number=n_el, sz_twice=n_el % 2)
        e0 = exact_eigensystem(op, sector, k=1)[0][0]
        info["ground_energy"] = e0
        if meta.reference_energy is not None:
            info["reference_energy"] = meta.reference_energy
            info["reference_match"] = abs(e0 - meta.reference_energy) < args.tol
    _print_json(info)
    return EXIT_OK if info.get("reference_match", True) else EXIT_NUMERICAL


def cmd_dataset_build(args: argparse.Namespace) -> int:
    cfg = _config_from_args(args)
    ds = build_dataset(cfg.load_manifest(), cfg)
    ds.save(args.out)
    atomic_write_text(Path(str(args.out) + ".config.json"), json.dumps(cfg.to_dict(), indent=1, sort_keys=True) + "\n")
    _print_json({"dataset": str(args.out), "entries": int(ds.targets.shape[0]), "digest": ds.digest()})
    return EXIT_OK


def _load_dataset(path: str) -> tuple[Dataset, ExperimentConfig]:
    cfg = ExperimentConfig.load(str(path) + ".config.json")
    return Dataset.load(path, cfg.load_manifest()), cfg


def cmd_train(args: argparse.Namespace) -> int:
    ds, cfg = _load_dataset(args.dataset)
    model = train(ds, cfg)
    atomic_write_text(Path(args.out), json.dumps(model.to_dict(), indent=1) + "\n")
    _print_json({"model": str(args.out), "n_train": int(ds.train_idx.size)})
    return EXIT_OK


def cmd_evaluate(args: argparse.Namespace) -> int:
    ds, cfg = _load_dataset(args.dataset)
    model = RegressionModel.from_dict(json.loads(Path(args.model).read_text()))
    if model.scaling is None:
        model.scaling = ds.scaling
    evals = {"with_entangler": evaluate(ds, model), "random_guess": random_guess(ds)}
    report = Report(cfg, ds, model, evals, ds.ground.vqe_summary())
    write_report(report, Path(args.out))
    _print_json(report.to_dict()["metrics"])
    return EXIT_OK


def cmd_run(args: argparse.Namespace) -> int:
    cfg = _config_from_args(args)
    report = run_experiment(cfg)
    _print_json({"metrics": report.to_dict()["metrics"], "vqe": report.vqe, "output_dir": cfg.output_dir})
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    cfg = _config_from_args(args)
    points = sweep_shots(cfg, args.shots)
    _print_json([p.to_dict() for p in points])
    return EXIT_OK


def cmd_hubbard_demo(args: argparse.Namespace) -> int:
    from .hubbard import linearity_experiment

    res = linearity_experiment(args.case, seed=args.seed)
    out = res.to_dict()
    if args.output_dir:
        d = Path(args.output_dir)
        atomic_write_text(d / "metrics.json", json.dumps(out, indent=1, sort_keys=True) + "\n")
        lines = ["# U truth_dE1 pred_dE1 truth_dE2 pred_dE2 truth_mu pred_mu (standardized)"]
        for i in np.argsort(res.u_test):
            row = [res.u_test[i]]
            for k in range(3):
                row += [res.y_test_std[i, k], res.pred_test_std[i, k]]
            lines.append(" ".join(repr(float(v)) for v in row))
        atomic_write_text(d / f"hubbard_case{args.case}.dat", "\n".join(lines) + "\n")
    _print_json(out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qrc-excited", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    ham = sub.add_parser("hamiltonian").add_subparsers(dest="action", required=True)
    v = ham.add_parser("validate", help="parse an operator file and check its reference energy")
    v.add_argument("path")
    v.add_argument("--electrons", type=int, default=None)
    v.add_argument("--tol", type=float, default=1e-8)
    v.set_defaults(func=cmd_hamiltonian_validate)

    ds = sub.add_parser("dataset").add_subparsers(dest="action", required=True)
    b = ds.add_parser("build")
    _add_config_flags(b)
    b.add_argument("--out", required=True)
    b.set_defaults(func=cmd_dataset_build)

    t = sub.add_parser("train")
    t.add_argument("--dataset", required=True)
    t.add_argument("--out", required=True)
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("evaluate")
    e.add_argument("--dataset", required=True)
    e.add_argument("--model", required=True)
    e.add_argument("--out", required=True)
    e.set_defaults(func=cmd_evaluate)

    r = sub.add_parser("run", help="build, train and evaluate in one go")
    _add_config_flags(r)
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("sweep-shots")
    _add_config_flags(s)
    s.add_argument("--shots", type=int, nargs="+", required=True)
    s.set_defaults(func=cmd_sweep)

    hub = sub.add_parser("hubbard").add_subparsers(dest="action", required=True)
    d = hub.add_parser("demo")
    d.add_argument("--case", type=int, choices=(1, 2), required=True)
    d.add_argument("--seed", type=int, default=0)
    d.add_argument("--output-dir", default=None)
    d.set_defaults(func=cmd_hubbard_demo)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ConfigError, HamiltonianFileError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (DatasetError, TargetError, np.linalg.LinAlgError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
