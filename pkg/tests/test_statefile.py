"""Tests for idemrdm.statefile — state and orbital file parsing."""

from __future__ import annotations

import hashlib
import json
import logging
import math
from pathlib import Path

import numpy as np
import pytest

from idemrdm.algebra import OccupationState, Statistics
from idemrdm.density import Mixture
from idemrdm.statefile import parse_orbital_file, parse_state_file

STATES_DIR = Path(__file__).resolve().parent.parent / "states"
INV_SQRT2 = 1 / math.sqrt(2)


# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------

def _write(tmp_path: Path, data, name: str = "state.json") -> Path:
    path = tmp_path / name
    path.write_text(data if isinstance(data, str) else json.dumps(data))
    return path


def _make_state(**overrides) -> dict:
    data = {
        "statistics": "fermion",
        "dim": 4,
        "modes": {"L": [0, 1], "R": [2, 3]},
        "terms": [{"amplitude": [1.0, 0.0], "orbitals": [0, 2]}],
    }
    data.update(overrides)
    return data


# ===========================================================================
# Bundled state files
# ===========================================================================


class TestBundledStates:
    """The example files shipped in states/."""

    def test_three_fermion_state(self):
        parsed = parse_state_file(STATES_DIR / "three_fermions.json")
        assert parsed.statistics is Statistics.FERMION
        assert parsed.dim == 8
        assert parsed.bipartition.left == frozenset(range(4))
        assert parsed.is_pure
        vector = parsed.to_state()
        assert vector.norm == pytest.approx(1.0, abs=1e-12)
        assert vector.amplitude(OccupationState((0, 1, 4))) == pytest.approx(INV_SQRT2)

    def test_digest_is_file_hash(self):
        path = STATES_DIR / "product.json"
        assert parse_state_file(path).digest == hashlib.sha256(path.read_bytes()).hexdigest()

    def test_boson_mixture(self):
        parsed = parse_state_file(STATES_DIR / "boson_mixture.json")
        state = parsed.to_state()
        assert isinstance(state, Mixture)
        assert [w for w, _ in state.components] == [0.5, 0.5]
        first = state.components[0][1]
        assert first.amplitude(OccupationState((1, 2))) == pytest.approx(0.8j)

    @pytest.mark.parametrize("name", ["three_fermions.json", "product.json", "bell_like.json"])
    def test_files_load(self, name: str):
        assert parse_state_file(STATES_DIR / name).space.dim >= 4


# ===========================================================================
# Schema errors
# ===========================================================================


class TestStateFileErrors:
    """Every schema problem names the file and the field."""

    def test_missing_file(self, tmp_path: Path):
        with pytest.raises(ValueError, match="cannot read file"):
            parse_state_file(tmp_path / "absent.json")

    def test_invalid_json_reports_line(self, tmp_path: Path):
        path = _write(tmp_path, '{\n  "statistics": "fermion",\n  "dim": ,\n}')
        with pytest.raises(ValueError, match="line 3: invalid JSON"):
            parse_state_file(path)

    def test_top_level_must_be_object(self, tmp_path: Path):
        with pytest.raises(ValueError, match="must be an object"):
            parse_state_file(_write(tmp_path, "[1, 2]"))

    def test_unknown_statistics(self, tmp_path: Path):
        path = _write(tmp_path, _make_state(statistics="anyon"))
        with pytest.raises(ValueError, match="field 'statistics'"):
            parse_state_file(path)

    @pytest.mark.parametrize("dim", [0, -3, 2.5, True, "4"])
    def test_invalid_dim(self, tmp_path: Path, dim):
        with pytest.raises(ValueError, match="field 'dim'"):
            parse_state_file(_write(tmp_path, _make_state(dim=dim)))

    def test_no_terms(self, tmp_path: Path):
        with pytest.raises(ValueError, match="no terms"):
            parse_state_file(_write(tmp_path, _make_state(terms=[])))

    def test_duplicate_fermion_orbital(self, tmp_path: Path):
        terms = [{"amplitude": [1.0, 0.0], "orbitals": [1, 1]}]
        with pytest.raises(ValueError, match=r"duplicate orbital in fermion term \[1, 1\]"):
            parse_state_file(_write(tmp_path, _make_state(terms=terms)))

    def test_boson_repeat_is_fine(self, tmp_path: Path):
        terms = [{"amplitude": [1.0, 0.0], "orbitals": [1, 1]}]
        parsed = parse_state_file(_write(tmp_path, _make_state(statistics="boson", terms=terms)))
        assert parsed.to_state().amplitude(OccupationState((1, 1))) == pytest.approx(1.0)

    def test_orbital_out_of_range(self, tmp_path: Path):
        terms = [{"amplitude": [1.0, 0.0], "orbitals": [0, 4]}]
        with pytest.raises(ValueError, match=r"terms\[0\]\.orbitals.*out of range"):
            parse_state_file(_write(tmp_path, _make_state(terms=terms)))

    def test_bad_amplitude(self, tmp_path: Path):
        terms = [{"amplitude": 1.0, "orbitals": [0, 2]}]
        with pytest.raises(ValueError, match=r"\[re, im\] pair"):
            parse_state_file(_write(tmp_path, _make_state(terms=terms)))

    def test_cancelling_terms(self, tmp_path: Path):
        terms = [
            {"amplitude": [1.0, 0.0], "orbitals": [0, 2]},
            {"amplitude": [1.0, 0.0], "orbitals": [2, 0]},
        ]
        with pytest.raises(ValueError, match="cancel"):
            parse_state_file(_write(tmp_path, _make_state(terms=terms)))

    def test_overlapping_modes(self, tmp_path: Path):
        modes = {"L": [0, 1, 2], "R": [2, 3]}
        with pytest.raises(ValueError, match=r"not a partition: both contain \[2\]"):
            parse_state_file(_write(tmp_path, _make_state(modes=modes)))

    def test_unassigned_orbital(self, tmp_path: Path):
        modes = {"L": [0], "R": [2, 3]}
        with pytest.raises(ValueError, match=r"orbitals \[1\] unassigned"):
            parse_state_file(_write(tmp_path, _make_state(modes=modes)))

    def test_terms_and_mixture_exclusive(self, tmp_path: Path):
        data = _make_state(mixture=[{"weight": 1.0, "terms": _make_state()["terms"]}])
        with pytest.raises(ValueError, match="exactly one"):
            parse_state_file(_write(tmp_path, data))

    def test_mixture_weights_must_sum_to_one(self, tmp_path: Path):
        terms = _make_state()["terms"]
        data = _make_state(mixture=[{"weight": 0.5, "terms": terms}, {"weight": 0.4, "terms": terms}])
        del data["terms"]
        with pytest.raises(ValueError, match="weights sum to 0.9"):
            parse_state_file(_write(tmp_path, data))

    def test_mixture_weight_must_be_positive(self, tmp_path: Path):
        data = _make_state(mixture=[{"weight": -1.0, "terms": _make_state()["terms"]}])
        del data["terms"]
        with pytest.raises(ValueError, match=r"mixture\[0\]\.weight"):
            parse_state_file(_write(tmp_path, data))

    def test_error_names_the_file(self, tmp_path: Path):
        path = _write(tmp_path, _make_state(dim=0), name="broken.json")
        with pytest.raises(ValueError, match="broken.json"):
            parse_state_file(path)


# ===========================================================================
# Normalization
# ===========================================================================


class TestNormalization:
    """Terms are renormalized, with a warning when far from unit norm."""

    def test_warns_and_normalizes(self, tmp_path: Path, caplog):
        terms = [
            {"amplitude": [3.0, 0.0], "orbitals": [0, 2]},
            {"amplitude": [0.0, 4.0], "orbitals": [1, 3]},
        ]
        path = _write(tmp_path, _make_state(terms=terms))
        with caplog.at_level(logging.WARNING, logger="idemrdm.statefile"):
            parsed = parse_state_file(path)
        assert "normalizing" in caplog.text
        vector = parsed.to_state()
        assert vector.norm == pytest.approx(1.0)
        assert vector.amplitude(OccupationState((1, 3))) == pytest.approx(0.8j)

    def test_rounded_amplitudes_do_not_warn(self, tmp_path: Path, caplog):
        with caplog.at_level(logging.WARNING, logger="idemrdm.statefile"):
            parse_state_file(STATES_DIR / "three_fermions.json")
        assert "normalizing" not in caplog.text


# ===========================================================================
# Orbital files
# ===========================================================================


class TestOrbitalFile:
    """Tests for parse_orbital_file()."""

    def test_ids_and_vectors(self, tmp_path: Path):
        data = {"statistics": "boson", "dim": 2, "orbitals": [0, [[0.6, 0.0], [0.0, 0.8]]]}
        parsed = parse_orbital_file(_write(tmp_path, data))
        assert parsed.statistics is Statistics.BOSON
        assert np.allclose(parsed.orbitals[0].amplitudes, [1, 0])
        assert np.allclose(parsed.orbitals[1].amplitudes, [0.6, 0.8j])

    def test_vector_length(self, tmp_path: Path):
        data = {"statistics": "boson", "dim": 3, "orbitals": [[[1.0, 0.0]]]}
        with pytest.raises(ValueError, match="expected 3 amplitudes"):
            parse_orbital_file(_write(tmp_path, data))

    def test_empty_list(self, tmp_path: Path):
        data = {"statistics": "fermion", "dim": 3, "orbitals": []}
        with pytest.raises(ValueError, match="non-empty list"):
            parse_orbital_file(_write(tmp_path, data))

    def test_id_out_of_range(self, tmp_path: Path):
        data = {"statistics": "fermion", "dim": 3, "orbitals": [3]}
        with pytest.raises(ValueError, match=r"orbitals\[0\]"):
            parse_orbital_file(_write(tmp_path, data))
