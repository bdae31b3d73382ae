"""Run configuration of the command line.

Values come from three layers, later ones winning: the dataclass defaults
below, an optional JSON config file, then explicit flags. The config file
holds a "grid" section, a "lab" section and the top-level keys seed and
workers, e.g.

    {"grid": {"n": 512}, "lab": {"B_list": [100, 1000]}, "seed": 7}
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any

from tc_shared.errors import ConfigurationError
from tc_shared.grid import RadialGrid, build_grid
from tc_shared.physics import DEFAULT_K_TRUNCATION, DEFAULT_N, DEFAULT_R_MAX, FlowParams
from tc_shared.physics.lab_defaults import LANCZOS_SEED, RING_CENTER

COMMANDS: tuple[str, ...] = ("resolvent", "semigroup", "simulate", "sweep", "verify")


@dataclass
class GridSettings:
    n: int = DEFAULT_N
    r_max: float = DEFAULT_R_MAX
    scheme: str = "uniform"

    def build(self) -> RadialGrid:
        try:
            return build_grid(self.n, self.r_max, self.scheme)
        except ValueError as exc:
            # GridScheme rejects unknown names with a bare ValueError
            raise ConfigurationError(str(exc)) from exc


@dataclass
class LabSettings:
    """Physics and run knobs shared by the subcommands.

    Unused knobs are carried along; they are echoed into every output so two
    runs with the same file are comparable whatever subcommand produced them.
    """

    # Mode and rotation
    k: int = 1
    B: float = 1e3
    B_list: list[float] = field(default_factory=list)

    # Resolvent scans
    norm_pair: str = "L2"
    c2: float = 0.0
    points: int = 256
    fit: bool = False

    # Semigroup
    trajectories: int = 20
    tau_end: float | None = None
    dt: float | None = None

    # Nonlinear runs and sweeps
    K: int = DEFAULT_K_TRUNCATION
    amplitude: float = 1e-2
    amplitudes: list[float] = field(default_factory=lambda: [1e-3, 1e-2, 1e-1, 1.0])
    modes: list[int] = field(default_factory=lambda: [1])
    r_c: float = RING_CENTER
    stride: int = 10
    c: float | None = None

    # Verification
    quick: bool = False

    def B_values(self) -> list[float]:
        return list(self.B_list) if self.B_list else [self.B]

    def params(self) -> FlowParams:
        return FlowParams.from_B(self.B)


@dataclass
class RunConfig:
    """Everything a run depends on; `to_dict` is what gets hashed and echoed."""

    command: str
    grid: GridSettings = field(default_factory=GridSettings)
    lab: LabSettings = field(default_factory=LabSettings)
    seed: int = LANCZOS_SEED
    workers: int = 1

    def __post_init__(self) -> None:
        if self.command not in COMMANDS:
            raise ConfigurationError(f"unknown command {self.command!r}")
        if self.workers < 1:
            raise ConfigurationError(f"workers must be >= 1, not {self.workers}")

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def load(
        cls,
        command: str,
        config_path: str | Path | None = None,
        overrides: dict[str, Any] | None = None,
    ) -> RunConfig:
        """Defaults, then the JSON file at `config_path`, then `overrides`.

        `overrides` maps field names of GridSettings, LabSettings or RunConfig
        to values; None values are skipped so unset flags do not mask the file.
        """
        config = cls(command=command)
        if config_path is not None:
            config = config.merged(read_config_file(config_path))
        if overrides:
            config = config.merged(_sectioned({k: v for k, v in overrides.items() if v is not None}))
        return config

    def merged(self, data: dict[str, Any]) -> RunConfig:
        unknown = set(data) - {"grid", "lab", "seed", "workers"}
        if unknown:
            raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
        return replace(
            self,
            grid=_merge_section(self.grid, data.get("grid", {}), "grid"),
            lab=_merge_section(self.lab, data.get("lab", {}), "lab"),
            seed=int(data.get("seed", self.seed)),
            workers=int(data.get("workers", self.workers)),
        )


def _merge_section(section, values: dict[str, Any], name: str):
    if not isinstance(values, dict):
        raise ConfigurationError(f"config section {name!r} must be an object")
    known = {f.name for f in fields(section)}
    unknown = set(values) - known
    if unknown:
        raise ConfigurationError(f"unknown {name} keys: {sorted(unknown)}")
    return replace(section, **values)


def _sectioned(flat: dict[str, Any]) -> dict[str, Any]:
    grid_keys = {f.name for f in fields(GridSettings)}
    lab_keys = {f.name for f in fields(LabSettings)}
    data: dict[str, Any] = {"grid": {}, "lab": {}}
    for key, value in flat.items():
        if key in grid_keys:
            data["grid"][key] = value
        elif key in lab_keys:
            data["lab"][key] = value
        elif key in ("seed", "workers"):
            data[key] = value
        else:
            raise ConfigurationError(f"unknown setting {key!r}")
    return data


def read_config_file(path: str | Path) -> dict[str, Any]:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigurationError(f"cannot read config file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigurationError(f"config file {path} must hold a JSON object")
    return data
