"""Metrics, ground-truth I/O and report emission."""

from .ground_truth import (
    load_moment_gt,
    load_moment_predictions,
    load_rankings,
    load_retrieval_gt,
    read_jsonl,
    save_moment_gt,
    save_moment_predictions,
    save_rankings,
    save_retrieval_gt,
    write_jsonl,
)
from .metrics import (
    MomentGroundTruth,
    RetrievalGroundTruth,
    mean_iou,
    mean_rank,
    median_rank,
    moment_metrics,
    moment_recall,
    rankings_from_matrix,
    recall_at_k,
    retrieval_metrics,
)
from .report import MetricRecord, emit_report, parse_report

__all__ = [
    "MetricRecord",
    "MomentGroundTruth",
    "RetrievalGroundTruth",
    "emit_report",
    "load_moment_gt",
    "load_moment_predictions",
    "load_rankings",
    "load_retrieval_gt",
    "mean_iou",
    "mean_rank",
    "median_rank",
    "moment_metrics",
    "moment_recall",
    "parse_report",
    "rankings_from_matrix",
    "read_jsonl",
    "recall_at_k",
    "retrieval_metrics",
    "save_moment_gt",
    "save_moment_predictions",
    "save_rankings",
    "save_retrieval_gt",
    "write_jsonl",
]
