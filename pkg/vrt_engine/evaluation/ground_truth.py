"""JSONL readers and writers for ground truth, rankings and moment predictions."""

import json
import logging
from pathlib import Path
from typing import Any, Dict, Iterable, Iterator, List, Mapping, Sequence, Union

from ..core.models import MomentWindow, RankedList
from ..errors import StoreIOError
from .metrics import MomentGroundTruth, RetrievalGroundTruth

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def read_jsonl(path: PathLike) -> Iterator[Dict[str, Any]]:
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as e:
        logger.error(f"Failed to read {path}: {e}")
        raise StoreIOError(f"Cannot read {path}: {e}") from e
    for number, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            yield json.loads(line)
        except json.JSONDecodeError as e:
            raise ValueError(f"{path}:{number}: invalid JSON: {e}") from e


def dumps_jsonl(rows: Iterable[Dict[str, Any]]) -> str:
    return "".join(json.dumps(row, ensure_ascii=False) + "\n" for row in rows)


def write_jsonl(path: PathLike, rows: Iterable[Dict[str, Any]]) -> None:
    try:
        Path(path).write_text(dumps_jsonl(rows), encoding="utf-8")
    except OSError as e:
        logger.error(f"Failed to write {path}: {e}")
        raise StoreIOError(f"Cannot write {path}: {e}") from e


def load_retrieval_gt(path: PathLike) -> RetrievalGroundTruth:
    """Rows: {"query_id": str, "item_ids": [str]}."""
    mapping: Dict[str, set] = {}
    for row in read_jsonl(path):
        mapping.setdefault(row["query_id"], set()).update(row["item_ids"])
    return RetrievalGroundTruth.from_mapping(mapping)


def save_retrieval_gt(path: PathLike, gt: RetrievalGroundTruth) -> None:
    write_jsonl(
        path,
        ({"query_id": qid, "item_ids": sorted(ids)} for qid, ids in gt.truth.items()),
    )


def load_moment_gt(path: PathLike) -> MomentGroundTruth:
    """Rows: {"query_id": str, "start_s": float, "end_s": float}."""
    return MomentGroundTruth(
        {row["query_id"]: MomentWindow(row["start_s"], row["end_s"]) for row in read_jsonl(path)}
    )


def save_moment_gt(path: PathLike, gt: MomentGroundTruth) -> None:
    write_jsonl(
        path,
        (
            {"query_id": qid, "start_s": w.start_s, "end_s": w.end_s}
            for qid, w in gt.windows.items()
        ),
    )


def load_rankings(path: PathLike) -> List[RankedList]:
    return [RankedList.from_dict(row) for row in read_jsonl(path)]


def save_rankings(path: PathLike, rankings: Sequence[RankedList]) -> None:
    write_jsonl(path, (r.to_dict() for r in rankings))


def load_moment_predictions(path: PathLike) -> Dict[str, List[MomentWindow]]:
    """Rows: {"query_id": str, "windows": [{"start_s", "end_s", "score"}]}."""
    return {
        row["query_id"]: [
            MomentWindow(w["start_s"], w["end_s"], w.get("score", 1.0)) for w in row["windows"]
        ]
        for row in read_jsonl(path)
    }


def save_moment_predictions(path: PathLike, predictions: Mapping[str, Sequence[MomentWindow]]) -> None:
    write_jsonl(
        path,
        (
            {"query_id": qid, "windows": [w.to_dict() for w in windows]}
            for qid, windows in predictions.items()
        ),
    )
