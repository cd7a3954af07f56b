"""Experiment harness: configuration, corpus decoding, sweeps and the CLI."""

from .config import ConfigError, ExperimentConfig, load_config
from .instances import build_instances, generate_instances
from .runner import (
    DataError,
    DecodeReport,
    SweepReport,
    compare_decoders,
    run_decode,
    run_sweep,
)

__all__ = [
    "ConfigError",
    "DataError",
    "DecodeReport",
    "ExperimentConfig",
    "SweepReport",
    "build_instances",
    "compare_decoders",
    "generate_instances",
    "load_config",
    "run_decode",
    "run_sweep",
]
