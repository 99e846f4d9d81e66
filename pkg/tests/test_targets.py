import numpy as np
import pytest

from qrc_excited.experiment import DatasetManifest, bundled_manifest, load_entry
from qrc_excited.hubbard import SECTOR, dipole_operator, hubbard_hamiltonian
from qrc_excited.pauli import PauliSum
from qrc_excited.statevector import SectorFilter
from qrc_excited.targets import TargetError, TargetTriple, analyze_spectrum, compute_targets


class TestHubbardTargets:
    def test_u3(self):
        _, h = hubbard_hamiltonian(3.0)
        t = compute_targets(h, dipole_operator(), SECTOR)
        np.testing.assert_allclose(t.as_array(), [1.0, 4.0, np.sqrt(0.2)], atol=1e-10)

    def test_triplet_counted_once(self):
        _, h = hubbard_hamiltonian(3.0)
        s = analyze_spectrum(h, [dipole_operator()], SECTOR)
        np.testing.assert_allclose(s.levels, [-1, 0, 3, 4], atol=1e-12)
        assert s.targets.delta_e2 == pytest.approx(4.0, abs=1e-12)
        # the level at 0 carries no dipole weight, so the bright state sits at 3
        assert s.excited_energy == pytest.approx(3.0, abs=1e-12)


def test_lih_fixture_golden_values():
    man = DatasetManifest.load(bundled_manifest("lih_1p5"))
    h, dip, meta = load_entry(man.entries[0], man.n_qubits)
    t = compute_targets(h, dip, man.sector)
    np.testing.assert_allclose(t.as_array(), meta.reference_targets, atol=1e-6)


class TestErrors:
    def test_no_bright_state(self):
        h = PauliSum.from_text(2, [(1.0, "Z0"), (0.5, "Z1")])
        dip = PauliSum.from_text(2, [(1.0, "Z0 Z1")])
        with pytest.raises(TargetError):
            compute_targets(h, dip, SectorFilter())

    def test_too_few_levels(self):
        with pytest.raises(TargetError):
            compute_targets(PauliSum.from_text(1, [(1.0, "Z0")]), PauliSum.from_text(1, [(1.0, "X0")]), SectorFilter())

    def test_degenerate_ground(self):
        h = PauliSum.from_text(2, [(1.0, "Z0 Z1"), (0.1, "Z0")])
        with pytest.raises(TargetError):
            compute_targets(h, PauliSum.from_text(2, [(1.0, "X0")]), SectorFilter(particle_number=1))

    def test_triple_ordering(self):
        with pytest.raises(ValueError):
            TargetTriple(2.0, 1.0, 0.1)
        with pytest.raises(ValueError):
            TargetTriple(1.0, 2.0, -0.1)


def test_dipole_norm_is_l2_over_components():
    # three orthogonal bright directions on a 2-qubit toy model
    h = PauliSum.from_text(2, [(1.0, "Z0"), (0.3, "Z1")])
    comps = [PauliSum.from_text(2, [(c, "X0")]) for c in (0.3, 0.4, 1.2)]
    t = compute_targets(h, comps, SectorFilter())
    assert t.dipole_norm == pytest.approx(1.3, abs=1e-12)
