"""Tests for idemrdm.report — JSON and text rendering, report digests."""

from __future__ import annotations

import json

import numpy as np

from idemrdm.report import Report, format_density_matrix, to_jsonable


def _make_report(**overrides) -> Report:
    defaults = {
        "command": "entropy",
        "argv": ("entropy", "states/three_fermions.json"),
        "inputs_digest": "abc123",
        "results": {"entropy": 1.0, "eigenvalues": np.array([0.5, 0.5])},
        "residuals": {"trace_deviation": 2e-16},
        "checks": {"valid_density_matrix": True},
        "seconds": 0.25,
    }
    defaults.update(overrides)
    return Report(**defaults)


class TestToJsonable:
    """Tests for to_jsonable()."""

    def test_numpy_values(self):
        data = to_jsonable({"a": np.float64(0.5), "b": np.arange(2), "c": np.bool_(True)})
        assert data == {"a": 0.5, "b": [0, 1], "c": True}
        assert type(data["b"][0]) is int

    def test_complex_becomes_pair(self):
        assert to_jsonable([1 + 2j, np.complex128(-1j)]) == [[1.0, 2.0], [-0.0, -1.0]]


class TestReport:
    """Tests for Report."""

    def test_passed_requires_every_check(self):
        assert _make_report().passed
        assert not _make_report(checks={"a": True, "b": False}).passed
        assert _make_report(checks={}).passed

    def test_digest_ignores_timing(self):
        assert _make_report(seconds=0.1).report_digest == _make_report(seconds=9.0).report_digest
        assert (
            _make_report(timings={"ryser_n4": 1.0}).report_digest
            == _make_report(timings={"ryser_n4": 2.0}).report_digest
        )

    def test_digest_tracks_results(self):
        assert (
            _make_report().report_digest
            != _make_report(results={"entropy": 0.9}).report_digest
        )

    def test_json_layout(self):
        data = json.loads(_make_report(timings={"x": 0.5}).to_json())
        assert data["pass"] is True
        assert data["results"]["eigenvalues"] == [0.5, 0.5]
        assert data["timing"] == {"seconds": 0.25, "x": 0.5}
        assert data["report_digest"] == _make_report().report_digest

    def test_json_without_timing(self):
        assert "timing" not in _make_report().to_dict(include_timing=False)

    def test_text_rows(self):
        text = _make_report().to_text()
        lines = text.splitlines()
        assert lines[0].split() == ["command", "entropy"]
        assert "trace_deviation" in text
        assert "2.000e-16" in text
        assert lines[-1].split() == ["status", "PASS"]

    def test_text_reports_failure(self):
        text = _make_report(checks={"gns": False}).to_text()
        assert "FAIL" in text.splitlines()[-1]


class TestFormatDensityMatrix:
    """Tests for format_density_matrix()."""

    def test_real_entries(self):
        text = format_density_matrix(["{0}", "{1}"], np.diag([0.5, 0.5]))
        lines = text.splitlines()
        assert len(lines) == 3
        assert lines[1].split() == ["{0}", "0.500000", "0.000000"]

    def test_complex_entries(self):
        text = format_density_matrix(["{0}"], np.array([[0.5 + 0.25j]]))
        assert "0.500000+0.250000j" in text
