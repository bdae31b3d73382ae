"""Run configuration of the command line."""

from .settings import COMMANDS, GridSettings, LabSettings, RunConfig, read_config_file

__all__ = [
    "COMMANDS",
    "GridSettings",
    "LabSettings",
    "RunConfig",
    "read_config_file",
]
