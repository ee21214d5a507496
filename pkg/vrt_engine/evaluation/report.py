"""Metric report emission as JSON or CSV bytes."""

import csv
import io
import json
import math
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence

from ..errors import InvalidConfig

CSV_COLUMNS = ("task", "metric", "k", "threshold", "value")
FORMATS = ("json", "csv")


@dataclass(frozen=True)
class MetricRecord:
    task: str
    metric: str
    k: Optional[int]
    threshold: Optional[float]
    value: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.value):
            raise ValueError(f"Metric {self.task}/{self.metric} is not finite: {self.value}")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "task": self.task,
            "metric": self.metric,
            "k": self.k,
            "threshold": self.threshold,
            "value": self.value,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "MetricRecord":
        return cls(data["task"], data["metric"], data.get("k"), data.get("threshold"), data["value"])


def emit_report(metrics: Sequence[MetricRecord], fmt: str = "json") -> bytes:
    """Serialize metrics deterministically."""
    if fmt == "json":
        return (json.dumps([m.to_dict() for m in metrics], indent=2) + "\n").encode("utf-8")
    if fmt == "csv":
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for m in metrics:
            writer.writerow(
                [
                    m.task,
                    m.metric,
                    "" if m.k is None else m.k,
                    "" if m.threshold is None else repr(m.threshold),
                    repr(m.value),
                ]
            )
        return buffer.getvalue().encode("utf-8")
    raise InvalidConfig(f"Unknown report format {fmt!r}; expected one of {FORMATS}")


def parse_report(data: bytes, fmt: str = "json") -> List[MetricRecord]:
    """Inverse of emit_report."""
    text = data.decode("utf-8")
    if fmt == "json":
        return [MetricRecord.from_dict(row) for row in json.loads(text)]
    if fmt == "csv":
        rows = list(csv.DictReader(io.StringIO(text)))
        return [
            MetricRecord(
                row["task"],
                row["metric"],
                int(row["k"]) if row["k"] else None,
                float(row["threshold"]) if row["threshold"] else None,
                float(row["value"]),
            )
            for row in rows
        ]
    raise InvalidConfig(f"Unknown report format {fmt!r}; expected one of {FORMATS}")
