"""Benchmarks, stress histories, linearizability checking and audits."""

from cachetrie.harness.audit import AuditReport, run_audit
from cachetrie.harness.linearizability import Verdict, check_linearizability
from cachetrie.harness.stress import OpRecord, run_stress
from cachetrie.harness.workload import (
    CSV_HEADER,
    BenchmarkReport,
    ConfigError,
    WorkloadConfig,
    run_benchmark,
)

__all__ = [
    "AuditReport",
    "BenchmarkReport",
    "CSV_HEADER",
    "ConfigError",
    "OpRecord",
    "Verdict",
    "WorkloadConfig",
    "check_linearizability",
    "run_audit",
    "run_benchmark",
    "run_stress",
]
