"""Configuration parsing, experiment runners, reports and the CLI."""
from .config import ExperimentConfig, ExperimentKind, parse_config
from .experiments import ReplicaFailure, run_experiment
from .ks import KSResult, ks_two_sample
from .outputs import ExperimentReport, emit_outputs, read_report_csv, recheck

__all__ = [
    "ExperimentConfig",
    "ExperimentKind",
    "ExperimentReport",
    "KSResult",
    "ReplicaFailure",
    "emit_outputs",
    "ks_two_sample",
    "parse_config",
    "read_report_csv",
    "recheck",
    "run_experiment",
]
