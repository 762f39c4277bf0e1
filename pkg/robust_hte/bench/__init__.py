"""Simulation benchmark: methods, sweeps, metrics and tables."""

from .metrics import Metrics, MetricSummary, metrics, summarize
from .base_method import BaseMethod
from .methods import ProposedMethod, PlainAipwMethod, IpwMethod, OrMethod, OracleMethod
from .method_factory import MethodFactory
from .sweep import (
    SweepConfig,
    BenchCell,
    BenchReport,
    run_replication,
    run_sweep,
    score_dataset,
)
from .tables import render_tables, report_frame, write_outputs

__all__ = [
    "Metrics",
    "MetricSummary",
    "metrics",
    "summarize",
    "BaseMethod",
    "ProposedMethod",
    "PlainAipwMethod",
    "IpwMethod",
    "OrMethod",
    "OracleMethod",
    "MethodFactory",
    "SweepConfig",
    "BenchCell",
    "BenchReport",
    "run_replication",
    "run_sweep",
    "score_dataset",
    "render_tables",
    "report_frame",
    "write_outputs",
]
