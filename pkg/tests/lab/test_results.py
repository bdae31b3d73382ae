"""Tests for result persistence."""

import json
import math

import numpy as np

from tc_lab.services.results import (
    ResultWriter,
    canonical_json,
    config_hash,
    jsonable,
    resolve_output_dir,
)
from tc_shared import __version__
from tc_shared.grid import build_grid


class TestCanonicalForm:
    """Tests for jsonable, canonical_json and config_hash."""

    def test_numpy_values_unwrapped(self):
        """Test that arrays and numpy scalars become plain JSON values."""
        value = jsonable({"a": np.array([1.0, 2.0]), "b": np.float64(0.5), 3: (1, 2)})

        assert value == {"a": [1.0, 2.0], "b": 0.5, "3": [1, 2]}

    def test_non_finite_becomes_null(self):
        """Test that inf and nan are written as null."""
        assert jsonable([math.inf, math.nan, 1.0]) == [None, None, 1.0]

    def test_hash_ignores_key_order(self):
        """Test that the hash depends on content, not key order."""
        first = {"grid": {"n": 256, "r_max": 20.0}, "seed": 1}
        second = {"seed": 1, "grid": {"r_max": 20.0, "n": 256}}

        assert config_hash(first) == config_hash(second)
        assert canonical_json(first) == canonical_json(second)

    def test_hash_changes_with_content(self):
        """Test that different configurations hash differently."""
        assert config_hash({"seed": 1}) != config_hash({"seed": 2})


class TestResolveOutputDir:
    """Tests for resolve_output_dir precedence."""

    def test_flag_wins(self, monkeypatch, tmp_path):
        """Test that the flag beats the environment."""
        monkeypatch.setenv("TC_LAB_OUTPUT_DIR", str(tmp_path / "env"))

        assert resolve_output_dir(tmp_path / "flag") == tmp_path / "flag"

    def test_environment_before_default(self, monkeypatch, tmp_path):
        """Test that the environment variable beats the default."""
        monkeypatch.setenv("TC_LAB_OUTPUT_DIR", str(tmp_path / "env"))

        assert resolve_output_dir(None) == tmp_path / "env"

    def test_default(self, monkeypatch):
        """Test the ./results fallback."""
        monkeypatch.delenv("TC_LAB_OUTPUT_DIR", raising=False)

        assert str(resolve_output_dir()) == "results"


class TestResultWriter:
    """Tests for ResultWriter."""

    def test_json_carries_meta(self, tmp_path):
        """Test that the JSON file holds the configuration, its hash and the grid."""
        config = {"command": "resolvent", "seed": 3}
        writer = ResultWriter(tmp_path, config)
        grid = build_grid(32, 10.0)

        path = writer.write_json("out.json", {"psi": 1.5, "gap": math.inf}, grid.describe())

        data = json.loads(path.read_text(encoding="utf-8"))
        assert data["meta"]["config"] == config
        assert data["meta"]["config_hash"] == config_hash(config)
        assert data["meta"]["version"] == __version__
        assert data["meta"]["grid"]["n"] == 32
        assert data["result"] == {"psi": 1.5, "gap": None}
        assert writer.written == [path]

    def test_csv_layout(self, tmp_path):
        """Test the comment header, the column row and the cell formats."""
        writer = ResultWriter(tmp_path / "nested", {"seed": 1})

        path = writer.write_csv("rows.csv", ["s", "sigma", "ok"], [(0.1, 2, True), (1 / 3, 4, False)])

        lines = path.read_text(encoding="utf-8").splitlines()
        assert lines[0] == f"# config_hash={writer.config_hash}"
        assert lines[1] == f"# version={__version__}"
        assert lines[2] == "s,sigma,ok"
        assert lines[3] == "0.1,2,true"
        assert lines[4] == f"{1 / 3!r},4,false"

    def test_output_is_reproducible(self, tmp_path):
        """Test that equal payloads give byte-identical files."""
        payload = {"values": [0.1, 0.2], "name": "scan"}
        first = ResultWriter(tmp_path / "a", {"seed": 1}).write_json("r.json", payload)
        second = ResultWriter(tmp_path / "b", {"seed": 1}).write_json("r.json", payload)

        assert first.read_bytes() == second.read_bytes()
