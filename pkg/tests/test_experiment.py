import csv
import json

import numpy as np
import pytest

from qrc_excited.experiment import (
    ConfigError,
    DatasetError,
    DatasetManifest,
    Dataset,
    ExperimentConfig,
    build_dataset,
    bundled_manifest,
    evaluate,
    prepare_ground_states,
    run_experiment,
    sweep_shots,
    train,
    write_hubbard_manifest,
)
from qrc_excited.hamiltonian_io import HamiltonianMetadata, write_hamiltonian
from qrc_excited.hubbard import FEATURE_STRINGS, linearity_experiment
from qrc_excited.learner import mae
from qrc_excited.pauli import PauliSum
from qrc_excited.statevector import pauli_expectation
from qrc_excited.targets import TARGET_NAMES


@pytest.fixture(scope="module")
def lih_config():
    return ExperimentConfig(manifest="bundled:lih", ablation=True)


@pytest.fixture(scope="module")
def lih_report(lih_config, tmp_path_factory):
    out = tmp_path_factory.mktemp("lih_run")
    return run_experiment(lih_config.replace(output_dir=str(out))), out


def hubbard_manifest(tmp_path, n=20, n_train=8, n_test=12, seed=0):
    us = np.random.default_rng(seed).uniform(0.1, 6.0, n)
    return write_hubbard_manifest(tmp_path, us, n_train, n_test, split_seed=1)


class TestManifest:
    @pytest.mark.parametrize("name,split", [("lih", (30, 50)), ("h4_line", (30, 50)), ("h4_rect", (250, 1250))])
    def test_default_splits(self, name, split):
        man = DatasetManifest.load(bundled_manifest(name))
        assert (man.n_train, man.n_test) == split
        train_idx, test_idx = man.split()
        assert len(train_idx) == split[0] and len(test_idx) == split[1]
        assert not set(train_idx) & set(test_idx)
        np.testing.assert_array_equal(man.split()[0], train_idx)

    def test_override_and_overflow(self):
        man = DatasetManifest.load(bundled_manifest("lih"), n_train=10, n_test=5)
        assert (man.n_train, man.n_test) == (10, 5)
        with pytest.raises(ConfigError):
            DatasetManifest.load(bundled_manifest("lih"), n_train=60, n_test=50)

    def test_sector(self):
        man = DatasetManifest.load(bundled_manifest("lih"))
        assert (man.sector.particle_number, man.sector.sz_twice) == (4, 0)

    def test_missing_and_malformed(self, tmp_path):
        with pytest.raises(ConfigError):
            DatasetManifest.load(tmp_path / "none.json")
        (tmp_path / "bad.json").write_text("{")
        with pytest.raises(ConfigError):
            DatasetManifest.load(tmp_path / "bad.json")
        (tmp_path / "partial.json").write_text(json.dumps({"entries": []}))
        with pytest.raises(ConfigError):
            DatasetManifest.load(tmp_path / "partial.json")
        with pytest.raises(ConfigError):
            bundled_manifest("unknown")

    def test_missing_operator_file(self, tmp_path):
        path = hubbard_manifest(tmp_path)
        (tmp_path / "u0003.ham").unlink()
        with pytest.raises(ConfigError):
            ExperimentConfig(manifest=str(path)).load_manifest()

    def test_save_load_round_trip(self, tmp_path):
        man = DatasetManifest.load(hubbard_manifest(tmp_path))
        man.save(tmp_path / "copy.json")
        again = DatasetManifest.load(tmp_path / "copy.json")
        assert again.entries == man.entries and again.split_seed == man.split_seed


class TestConfig:
    def test_round_trip(self, tmp_path):
        cfg = ExperimentConfig(manifest="bundled:lih", mode="noisy", reservoir_overrides={"T": 5.0})
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(cfg.to_dict()))
        assert ExperimentConfig.load(path) == cfg
        assert ExperimentConfig.load(path).digest() == cfg.digest()

    def test_relative_manifest_resolves_beside_config(self, tmp_path):
        (tmp_path / "cfg.json").write_text(json.dumps({"manifest": "data/manifest.json"}))
        assert ExperimentConfig.load(tmp_path / "cfg.json").manifest == str(tmp_path / "data/manifest.json")

    @pytest.mark.parametrize(
        "raw",
        [
            {"manifest": "m", "mode": "loud"},
            {"manifest": "m", "ground_state": "dft"},
            {"manifest": "m", "noise_p": 0.9},
            {"manifest": "m", "copies": 0},
            {"manifest": "m", "reservoir_overrides": {"omega": 1}},
            {"manifest": "m", "bogus": 1},
            {"mode": "noisy"},
        ],
    )
    def test_rejects(self, raw):
        with pytest.raises(ConfigError):
            ExperimentConfig.from_dict(raw)

    def test_defaults_by_mode(self):
        quiet = ExperimentConfig(manifest="m")
        loud = ExperimentConfig(manifest="m", mode="noisy")
        assert (quiet.resolved_ground_state, quiet.use_ridge) == ("exact", False)
        assert (loud.resolved_ground_state, loud.use_ridge) == ("vqe", True)
        assert loud.vqe_config(0).optimizer == "spsa" and loud.vqe_config(0).shots == 10**4
        assert quiet.vqe_config(0).optimizer == "nelder_mead" and quiet.vqe_config(0).shots is None


class TestDataset:
    def test_hubbard_reduction(self, tmp_path):
        lin = linearity_experiment(1, n_train=10, n_test=10, seed=4)
        us = np.concatenate([lin.u_train, lin.u_test])
        path = write_hubbard_manifest(tmp_path, us, 10, 10)
        cfg = ExperimentConfig(manifest=str(path), reservoir_overrides={"T": 0.0})
        ds = build_dataset(cfg.load_manifest(), cfg)
        # without the entangler every single-qubit expectation of the singlet vanishes
        np.testing.assert_allclose(ds.features, 0.0, atol=1e-12)
        np.testing.assert_allclose(ds.targets[10:], lin.y_test, atol=1e-12)
        feats = np.array([[pauli_expectation(s, p) for p in FEATURE_STRINGS] for s in ds.ground.states])
        zz = feats[:, 0]
        np.testing.assert_allclose(ds.targets[:, 2], np.sqrt((1 + zz) / 2), atol=1e-10)

    def test_deterministic_bytes(self, tmp_path):
        path = hubbard_manifest(tmp_path)
        cfg = ExperimentConfig(manifest=str(path), mode="noisy", ground_state="exact", feature_shots=1000)
        a = build_dataset(cfg.load_manifest(), cfg)
        b = build_dataset(cfg.load_manifest(), cfg)
        a.save(tmp_path / "a.npz")
        b.save(tmp_path / "b.npz")
        assert (tmp_path / "a.npz").read_bytes() == (tmp_path / "b.npz").read_bytes()
        assert a.digest() == b.digest()

    def test_noisy_features_close_to_noiseless(self, tmp_path):
        path = hubbard_manifest(tmp_path)
        quiet = ExperimentConfig(manifest=str(path))
        loud = quiet.replace(mode="noisy", ground_state="exact", noise_p=0.0, feature_shots=10**6)
        x0 = build_dataset(quiet.load_manifest(), quiet).features
        x1 = build_dataset(loud.load_manifest(), loud).features
        diff = np.abs(x1 - x0)
        assert diff.max() < 5e-3 and diff.max() > 0

    def test_save_load(self, tmp_path):
        path = hubbard_manifest(tmp_path)
        cfg = ExperimentConfig(manifest=str(path))
        man = cfg.load_manifest()
        ds = build_dataset(man, cfg)
        ds.save(tmp_path / "ds.npz")
        back = Dataset.load(tmp_path / "ds.npz", man)
        assert back.digest() == ds.digest() and back.reservoir == ds.reservoir

    def test_scaling_fit_on_train_only(self, tmp_path):
        cfg = ExperimentConfig(manifest=str(hubbard_manifest(tmp_path)))
        ds = build_dataset(cfg.load_manifest(), cfg)
        s = ds.scaled_targets
        np.testing.assert_allclose(s[ds.train_idx].min(axis=0), -1, atol=1e-15)
        np.testing.assert_allclose(s[ds.train_idx].max(axis=0), 1, atol=1e-15)

    def test_failure_names_entry(self, tmp_path):
        path = hubbard_manifest(tmp_path)
        # a Hamiltonian with no bright excited state
        write_hamiltonian(tmp_path / "u0005.ham", PauliSum.from_text(4, [(1.0, "Z0")]), HamiltonianMetadata(4))
        cfg = ExperimentConfig(manifest=str(path))
        with pytest.raises(DatasetError) as info:
            prepare_ground_states(cfg.load_manifest(), cfg)
        assert info.value.index == 5


def _read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


class TestReport:
    def test_outputs_written(self, lih_report):
        _, out = lih_report
        names = {p.name for p in out.iterdir()}
        assert {"config.resolved.json", "metrics.json", "predictions.csv", "predictions_random_guess.csv"} <= names
        assert {f"plot_{t}.dat" for t in TARGET_NAMES} <= names
        assert "predictions_without_entangler.csv" in names

    def test_csv_recomputes_metrics(self, lih_report):
        report, out = lih_report
        rows = _read_csv(out / "predictions.csv")
        assert len(rows) == 3 * 80
        metrics = json.loads((out / "metrics.json").read_text())["metrics"]["with_entangler"]
        for split in ("train", "test"):
            for t in TARGET_NAMES:
                sel = [r for r in rows if r["split"] == split and r["target"] == t]
                recomputed = mae(
                    np.array([float(r["prediction"]) for r in sel]), np.array([float(r["truth"]) for r in sel])
                )
                assert recomputed == pytest.approx(metrics[split]["mae"][t], abs=1e-12)
                assert metrics[split]["mae"][t] == report.evaluations["with_entangler"].metrics[split]["mae"][t]

    def test_scaled_columns_related_by_scaling(self, lih_report):
        report, out = lih_report
        scaling = report.dataset.scaling
        for r in _read_csv(out / "predictions.csv"):
            k = TARGET_NAMES.index(r["target"])
            back = (float(r["scaled_prediction"]) + 1.0) * (scaling.y_max[k] - scaling.y_min[k]) / 2.0 + scaling.y_min[k]
            assert back == float(r["prediction"])

    def test_seeds_recorded(self, lih_report):
        _, out = lih_report
        metrics = json.loads((out / "metrics.json").read_text())
        assert metrics["seeds"] == {"master_seed": 0, "reservoir_seed": 0, "split_seed": 7}
        assert len(metrics["config_hash"]) == 16
        assert json.loads((out / "config.resolved.json").read_text())["manifest"] == "bundled:lih"

    def test_bit_identical_reruns(self, lih_config, lih_report, tmp_path):
        _, out = lih_report
        first = {p.name: p.read_bytes() for p in out.iterdir()}
        run_experiment(lih_config.replace(output_dir=str(out)))
        assert {p.name: p.read_bytes() for p in out.iterdir()} == first

    def test_plot_data_sorted_by_geometry(self, lih_report):
        _, out = lih_report
        lines = [l for l in (out / "plot_delta_e1.dat").read_text().splitlines() if not l.startswith("#")]
        r = [float(l.split()[0]) for l in lines]
        assert r == sorted(r) and len(r) == 80

    def test_random_guess_is_train_mean(self, lih_report):
        report, _ = lih_report
        ev = report.evaluations["random_guess"]
        ds = report.dataset
        np.testing.assert_allclose(ev.predictions_scaled[0], ds.scaled_targets[ds.train_idx].mean(axis=0))

    def test_evaluate_matches_report(self, lih_config, lih_report):
        report, _ = lih_report
        ev = evaluate(report.dataset, train(report.dataset, lih_config))
        assert ev.metrics == report.evaluations["with_entangler"].metrics


class TestSweep:
    def test_requires_vqe(self, lih_config):
        with pytest.raises(ConfigError):
            sweep_shots(lih_config, [100])
        with pytest.raises(ConfigError):
            sweep_shots(lih_config.replace(mode="noisy"), [])

    def test_single_point_equals_run(self, tmp_path):
        path = hubbard_manifest(tmp_path, n=6, n_train=3, n_test=3)
        cfg = ExperimentConfig(manifest=str(path), mode="noisy", vqe_max_iterations=20, feature_shots=1000, output_dir=str(tmp_path / "sw"))
        (point,) = sweep_shots(cfg, [200])
        rep = run_experiment(cfg.replace(vqe_shots=200), write=False)
        assert point.vqe_energy_mae == rep.vqe["energy_mae"]
        assert point.test_mae_delta_e1 == rep.test_mae("delta_e1")
        assert (tmp_path / "sw" / "sweep.dat").read_text().splitlines()[1].startswith("200 ")
