"""JSON and CSV persistence with the run configuration echoed into every file.

Each JSON file is {"meta": {...}, "result": ...}; each CSV file starts with
"# key=value" comment lines carrying the same metadata. Output is a pure
function of the payload and the configuration: keys are sorted and floats
are written with repr precision.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import math
import os
from pathlib import Path
from typing import Any

from tc_shared import __version__
from tc_shared.physics.lab_defaults import DEFAULT_OUTPUT_DIR, OUTPUT_DIR_ENV
from tc_shared.physics.protocol import GridSpec


def jsonable(value: Any) -> Any:
    """Plain JSON types; numpy values are unwrapped and non-finite floats become null."""
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, list | tuple):
        return [jsonable(v) for v in value]
    if hasattr(value, "tolist"):
        return jsonable(value.tolist())
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def canonical_json(payload: Any) -> str:
    return json.dumps(jsonable(payload), sort_keys=True, separators=(",", ":"), allow_nan=False)


def config_hash(config: dict[str, Any]) -> str:
    """sha256 of the canonical JSON form of a run configuration."""
    return hashlib.sha256(canonical_json(config).encode("utf-8")).hexdigest()


def resolve_output_dir(flag: str | os.PathLike[str] | None = None) -> Path:
    """--output-dir, else $TC_LAB_OUTPUT_DIR, else ./results."""
    if flag:
        return Path(flag)
    env = os.environ.get(OUTPUT_DIR_ENV)
    return Path(env) if env else Path(DEFAULT_OUTPUT_DIR)


def _cell(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(float(value))
    return str(value)


class ResultWriter:
    """Single writer for the files of one run."""

    def __init__(
        self,
        output_dir: str | os.PathLike[str],
        config: dict[str, Any],
        logger: logging.Logger | None = None,
    ) -> None:
        self.output_dir = Path(output_dir)
        self.config = config
        self.config_hash = config_hash(config)
        self.written: list[Path] = []
        self._log = logger or logging.getLogger(__name__)

    def meta(self, grid: GridSpec | None = None) -> dict[str, Any]:
        return {
            "config": self.config,
            "config_hash": self.config_hash,
            "grid": grid,
            "version": __version__,
        }

    def _target(self, name: str) -> Path:
        self.output_dir.mkdir(parents=True, exist_ok=True)
        return self.output_dir / name

    def write_json(self, name: str, result: Any, grid: GridSpec | None = None) -> Path:
        path = self._target(name)
        text = json.dumps(
            jsonable({"meta": self.meta(grid), "result": result}),
            sort_keys=True,
            indent=2,
            allow_nan=False,
        )
        path.write_text(text + "\n", encoding="utf-8")
        self.written.append(path)
        self._log.info("wrote %s", path)
        return path

    def write_csv(
        self,
        name: str,
        header: list[str],
        rows,
        grid: GridSpec | None = None,
    ) -> Path:
        path = self._target(name)
        with path.open("w", encoding="utf-8", newline="") as handle:
            handle.write(f"# config_hash={self.config_hash}\n")
            handle.write(f"# version={__version__}\n")
            if grid is not None:
                handle.write(f"# grid={canonical_json(grid)}\n")
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(header)
            for row in rows:
                writer.writerow([_cell(v) for v in row])
        self.written.append(path)
        self._log.info("wrote %s", path)
        return path
