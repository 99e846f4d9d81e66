import json
import subprocess
import sys

import numpy as np
import pytest

from qrc_excited.cli import EXIT_NUMERICAL, EXIT_OK, EXIT_VALIDATION, main
from qrc_excited.experiment import DatasetManifest, bundled_manifest, write_hubbard_manifest
from qrc_excited.hamiltonian_io import HamiltonianMetadata, write_hamiltonian
from qrc_excited.pauli import PauliSum


@pytest.fixture
def hubbard_manifest(tmp_path):
    us = np.random.default_rng(0).uniform(0.1, 6.0, 20)
    return write_hubbard_manifest(tmp_path / "hub", us, 8, 12, split_seed=1)


def run(args, capsys):
    code = main([str(a) for a in args])
    out = capsys.readouterr()
    return code, out.out, out.err


class TestValidate:
    def test_lih_fixture(self, capsys):
        path = DatasetManifest.load(bundled_manifest("lih_1p5")).entries[0].hamiltonian
        code, out, _ = run(["hamiltonian", "validate", path], capsys)
        info = json.loads(out)
        assert code == EXIT_OK and info["reference_match"] and info["n_qubits"] == 8

    def test_malformed(self, tmp_path, capsys):
        bad = tmp_path / "bad.ham"
        bad.write_text("# n_qubits: 2\n1.0 x Z0\n")
        code, _, err = run(["hamiltonian", "validate", bad], capsys)
        assert code == EXIT_VALIDATION and "bad.ham:2:" in err

    def test_reference_mismatch(self, tmp_path, capsys):
        path = tmp_path / "z.ham"
        write_hamiltonian(path, PauliSum.from_text(2, [(1.0, "Z0")]), HamiltonianMetadata(2, n_electrons=1, reference_energy=0.5))
        code, out, _ = run(["hamiltonian", "validate", path], capsys)
        assert code == EXIT_NUMERICAL and json.loads(out)["reference_match"] is False

    def test_missing_file(self, tmp_path, capsys):
        code, _, _ = run(["hamiltonian", "validate", tmp_path / "none.ham"], capsys)
        assert code == EXIT_VALIDATION


class TestPipeline:
    def test_build_train_evaluate(self, hubbard_manifest, tmp_path, capsys):
        ds = tmp_path / "ds.npz"
        code, out, _ = run(["dataset", "build", "--manifest", hubbard_manifest, "--out", ds], capsys)
        assert code == EXIT_OK and json.loads(out)["entries"] == 20
        model = tmp_path / "model.json"
        assert run(["train", "--dataset", ds, "--out", model], capsys)[0] == EXIT_OK
        ev = tmp_path / "eval"
        code, out, _ = run(["evaluate", "--dataset", ds, "--model", model, "--out", ev], capsys)
        assert code == EXIT_OK
        metrics = json.loads(out)

        code, out2, _ = run(["run", "--manifest", hubbard_manifest, "--output-dir", tmp_path / "run"], capsys)
        assert code == EXIT_OK
        assert json.loads(out2)["metrics"]["with_entangler"] == metrics["with_entangler"]
        assert (ev / "predictions.csv").exists() and (tmp_path / "run" / "config.resolved.json").exists()

    def test_config_file_and_override(self, hubbard_manifest, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"manifest": str(hubbard_manifest), "reservoir_seed": 3}))
        code, out, _ = run(["run", "--config", cfg, "--reservoir-seed", "4", "--output-dir", tmp_path / "o"], capsys)
        assert code == EXIT_OK
        resolved = json.loads((tmp_path / "o" / "config.resolved.json").read_text())
        assert resolved["reservoir_seed"] == 4

    def test_bad_config(self, hubbard_manifest, capsys):
        code, _, err = run(["run", "--manifest", hubbard_manifest, "--mode", "loud"], capsys)
        assert code == EXIT_VALIDATION and "mode" in err

    def test_numerical_failure(self, hubbard_manifest, tmp_path, capsys):
        write_hamiltonian(hubbard_manifest.parent / "u0002.ham", PauliSum.from_text(4, [(1.0, "Z0")]), HamiltonianMetadata(4))
        code, _, err = run(["run", "--manifest", hubbard_manifest], capsys)
        assert code == EXIT_NUMERICAL and "entry 2" in err

    def test_sweep_needs_vqe(self, hubbard_manifest, capsys):
        code, _, _ = run(["sweep-shots", "--manifest", hubbard_manifest, "--shots", "100"], capsys)
        assert code == EXIT_VALIDATION


def test_hubbard_demo(tmp_path, capsys):
    code, out, _ = run(["hubbard", "demo", "--case", "1", "--output-dir", tmp_path], capsys)
    assert code == EXIT_OK
    info = json.loads(out)
    assert info["case"] == 1 and set(info["test_mae_standardized"]) == {"delta_e1", "delta_e2", "dipole_norm"}
    assert len((tmp_path / "hubbard_case1.dat").read_text().splitlines()) == 51


def test_console_script_entry_point():
    proc = subprocess.run([sys.executable, "-m", "qrc_excited.cli", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0 and "sweep-shots" in proc.stdout
