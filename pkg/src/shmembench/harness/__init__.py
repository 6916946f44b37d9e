"""Configuration, orchestration, and reporting for the benchmark suite."""

from .config import (BenchConfig, ConfigError, MeasurementSpec,
                     MEASUREMENT_TYPES, parse_config, parse_duration)
from .runner import (CSV_FIELDS, ResultRow, emit_results,
                     ground_truth_report, run_config, run_until_stable)

__all__ = [
    "BenchConfig", "ConfigError", "MeasurementSpec", "MEASUREMENT_TYPES",
    "parse_config", "parse_duration",
    "CSV_FIELDS", "ResultRow", "emit_results", "ground_truth_report",
    "run_config", "run_until_stable",
]
