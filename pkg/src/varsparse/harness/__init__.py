"""Experiment orchestration: verification suites, domination sweeps, reports and the CLI."""

from .config import ConfigError, ExperimentConfig
from .registry import UnknownSuiteError, all_suites, resolve, run_suite, verify_lemma
from .report import Report, ReportRow

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "Report",
    "ReportRow",
    "UnknownSuiteError",
    "all_suites",
    "resolve",
    "run_suite",
    "verify_lemma",
]
