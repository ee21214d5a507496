"""Retrieval and moment metrics."""

import logging
from dataclasses import dataclass
from types import MappingProxyType
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence

import numpy as np

from ..core.models import MomentWindow, RankedList
from ..core.similarity import interval_iou
from ..errors import DimMismatch, DuplicateId, EmptyInput, MissingGroundTruth
from .report import MetricRecord

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RetrievalGroundTruth:
    """query_id -> non-empty set of correct item ids."""

    truth: Mapping[str, FrozenSet[str]]

    def __post_init__(self) -> None:
        frozen = {qid: frozenset(ids) for qid, ids in self.truth.items()}
        empty = [qid for qid, ids in frozen.items() if not ids]
        if empty:
            raise EmptyInput(f"Ground truth has empty id sets for: {empty[:5]}")
        object.__setattr__(self, "truth", MappingProxyType(frozen))

    @classmethod
    def from_mapping(cls, mapping: Mapping[str, Iterable[str]]) -> "RetrievalGroundTruth":
        return cls({qid: frozenset(ids) for qid, ids in mapping.items()})

    def correct(self, query_id: str) -> FrozenSet[str]:
        try:
            return self.truth[query_id]
        except KeyError:
            raise MissingGroundTruth(f"No ground truth for query {query_id}") from None

    def inverted(self) -> "RetrievalGroundTruth":
        """item_id -> query ids that name it (video-to-text direction)."""
        inverse: Dict[str, set] = {}
        for qid, ids in self.truth.items():
            for item_id in ids:
                inverse.setdefault(item_id, set()).add(qid)
        return RetrievalGroundTruth.from_mapping(inverse)

    def __len__(self) -> int:
        return len(self.truth)


@dataclass(frozen=True)
class MomentGroundTruth:
    """query_id -> annotated window."""

    windows: Mapping[str, MomentWindow]

    def __post_init__(self) -> None:
        object.__setattr__(self, "windows", MappingProxyType(dict(self.windows)))

    def window(self, query_id: str) -> MomentWindow:
        try:
            return self.windows[query_id]
        except KeyError:
            raise MissingGroundTruth(f"No ground-truth window for query {query_id}") from None

    def __len__(self) -> int:
        return len(self.windows)


def first_hit_rank(ranking: RankedList, correct: FrozenSet[str]) -> Optional[int]:
    """1-based rank of the first correct item, or None when none is listed."""
    for rank, item_id in enumerate(ranking.item_ids, start=1):
        if item_id in correct:
            return rank
    return None


def _rankings_by_query(
    rankings: Sequence[RankedList], gt: RetrievalGroundTruth
) -> Dict[str, RankedList]:
    by_query: Dict[str, RankedList] = {}
    for ranking in rankings:
        gt.correct(ranking.query_id)
        if ranking.query_id in by_query:
            raise DuplicateId(f"Query {ranking.query_id} has more than one ranking")
        by_query[ranking.query_id] = ranking
    missing = len(gt) - len(by_query)
    if missing:
        logger.warning(f"{missing} ground-truth queries have no ranking; counting them as misses")
    return by_query


def recall_at_k(rankings: Sequence[RankedList], gt: RetrievalGroundTruth, k: int) -> float:
    """Fraction of ground-truth queries with a correct item in their top k.

    Queries without a ranking are misses; 0.0 when the ground truth is empty.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    by_query = _rankings_by_query(rankings, gt)
    if not len(gt):
        return 0.0
    hits = 0
    for query_id, correct in gt.truth.items():
        ranking = by_query.get(query_id)
        if ranking is not None:
            rank = first_hit_rank(ranking, correct)
            hits += rank is not None and rank <= k
    return hits / len(gt)


def _ranks(rankings: Sequence[RankedList], gt: RetrievalGroundTruth) -> np.ndarray:
    # Unlisted ground truth counts as one past the end of the list.
    ranks = []
    for ranking in rankings:
        rank = first_hit_rank(ranking, gt.correct(ranking.query_id))
        ranks.append(rank if rank is not None else len(ranking) + 1)
    return np.array(ranks, dtype=np.float64)


def median_rank(rankings: Sequence[RankedList], gt: RetrievalGroundTruth) -> float:
    if not rankings:
        raise EmptyInput("No rankings to compute a median rank over")
    return float(np.median(_ranks(rankings, gt)))


def mean_rank(rankings: Sequence[RankedList], gt: RetrievalGroundTruth) -> float:
    if not rankings:
        raise EmptyInput("No rankings to compute a mean rank over")
    return float(np.mean(_ranks(rankings, gt)))


def rankings_from_matrix(
    similarities: np.ndarray,
    row_ids: Sequence[str],
    col_ids: Sequence[str],
    k: Optional[int] = None,
) -> List[RankedList]:
    """One RankedList per row of an m x n similarity matrix.

    Pass the transpose with swapped id lists for the opposite direction.
    """
    similarities = np.asarray(similarities, dtype=np.float64)
    if similarities.shape != (len(row_ids), len(col_ids)):
        raise DimMismatch(
            f"Matrix {similarities.shape} vs {len(row_ids)} rows x {len(col_ids)} columns"
        )
    rankings = []
    for row_id, row in zip(row_ids, similarities):
        ranked = RankedList.from_scores(row_id, zip(col_ids, (float(s) for s in row)))
        rankings.append(ranked.top(k) if k else ranked)
    return rankings


def retrieval_metrics(
    rankings: Sequence[RankedList],
    gt: RetrievalGroundTruth,
    task: str,
    ks: Sequence[int] = (1, 5, 10),
) -> List[MetricRecord]:
    """R@k for each k plus median and mean rank."""
    records = [MetricRecord(task, "recall", k, None, recall_at_k(rankings, gt, k)) for k in ks]
    if rankings:
        records.append(MetricRecord(task, "median_rank", None, None, median_rank(rankings, gt)))
        records.append(MetricRecord(task, "mean_rank", None, None, mean_rank(rankings, gt)))
    return records


def _check_predictions(
    predictions: Mapping[str, Sequence[MomentWindow]], gt: MomentGroundTruth
) -> None:
    for query_id in predictions:
        gt.window(query_id)
    missing = len(gt) - len(predictions)
    if missing:
        logger.warning(f"{missing} ground-truth queries have no predictions; counting them as empty")


def moment_recall(
    predictions: Mapping[str, Sequence[MomentWindow]],
    gt: MomentGroundTruth,
    iou_threshold: float,
    k: int,
) -> float:
    """Fraction of ground-truth queries with a top-k window at IoU >= threshold.

    Empty or absent predictions miss.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    _check_predictions(predictions, gt)
    if not len(gt):
        return 0.0
    hits = 0
    for query_id, truth in gt.windows.items():
        windows = list(predictions.get(query_id, ()))[:k]
        hits += any(interval_iou(w, truth) >= iou_threshold for w in windows)
    return hits / len(gt)


def mean_iou(predictions: Mapping[str, Sequence[MomentWindow]], gt: MomentGroundTruth) -> float:
    """Mean top-1 IoU over ground-truth queries; queries without windows contribute 0."""
    _check_predictions(predictions, gt)
    if not len(gt):
        return 0.0
    total = 0.0
    for query_id, truth in gt.windows.items():
        windows = predictions.get(query_id)
        if windows:
            total += interval_iou(windows[0], truth)
    return total / len(gt)


def moment_metrics(
    predictions: Mapping[str, Sequence[MomentWindow]],
    gt: MomentGroundTruth,
    thresholds: Sequence[float] = (0.3, 0.5, 0.7),
    ks: Sequence[int] = (1, 5),
) -> List[MetricRecord]:
    records = [
        MetricRecord("moment", "recall", k, threshold, moment_recall(predictions, gt, threshold, k))
        for k in ks
        for threshold in thresholds
    ]
    records.append(MetricRecord("moment", "miou", None, None, mean_iou(predictions, gt)))
    return records
