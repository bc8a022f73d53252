from .aggregate import AggregateReport, ItemSummary, aggregate, nearest_rank, pct_half_up
from .bench import (
    BenchReport,
    latency_bench,
    read_trace_csv,
    synthetic_baseline_trace,
    write_trace_csv,
)
from .forms import (
    EVAL_FORM_ITEMS,
    LIKERT_LEVELS,
    N_ITEMS,
    EvalRecord,
    read_records_csv,
    read_records_jsonl,
    validate_record,
    write_records_csv,
    write_records_jsonl,
)
from .probe import ProbeReport, probe_behavior

__all__ = [
    "AggregateReport",
    "BenchReport",
    "EVAL_FORM_ITEMS",
    "EvalRecord",
    "ItemSummary",
    "LIKERT_LEVELS",
    "N_ITEMS",
    "ProbeReport",
    "aggregate",
    "latency_bench",
    "nearest_rank",
    "pct_half_up",
    "probe_behavior",
    "read_records_csv",
    "read_records_jsonl",
    "read_trace_csv",
    "synthetic_baseline_trace",
    "validate_record",
    "write_records_csv",
    "write_records_jsonl",
    "write_trace_csv",
]
