"""Shared domain types: embeddings, corpus items, queries, rankings, windows."""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from ..errors import DimensionMismatch, DuplicateId, EmptyInput, InvalidVector

logger = logging.getLogger(__name__)

NORM_TOLERANCE = 1e-6


class ItemKind(str, Enum):
    """Kind of a stored corpus item."""

    VIDEO = "video"
    TEXT = "text"
    FRAME = "frame"


class QueryKind(str, Enum):
    """Kind of a query or embed request item."""

    TEXT = "text"
    VIDEO = "video"
    FRAME = "frame"
    COMPOSED = "composed"


class ComposedOrder(str, Enum):
    """Placement of the source video relative to the modification text."""

    VIDEO_FIRST = "video_first"
    TEXT_FIRST = "text_first"


@dataclass(frozen=True, eq=False)
class EmbeddingVector:
    """Fixed-dimension real vector; stored read-only in 64-bit."""

    values: np.ndarray
    normalized: bool = False

    def __post_init__(self) -> None:
        """Copy, widen and validate the values."""
        arr = np.array(self.values, dtype=np.float64)
        if arr.ndim != 1 or arr.size == 0:
            raise DimensionMismatch(
                f"Embedding must be a non-empty 1-D vector, got shape {arr.shape}"
            )
        if not np.all(np.isfinite(arr)):
            raise InvalidVector("Embedding contains NaN or Inf")
        if self.normalized:
            norm = float(np.linalg.norm(arr))
            if abs(norm - 1.0) > NORM_TOLERANCE:
                raise InvalidVector(f"Vector flagged normalized has norm {norm}")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @property
    def dim(self) -> int:
        return int(self.values.shape[0])

    def norm(self) -> float:
        return float(np.linalg.norm(self.values))

    def to_list(self) -> List[float]:
        return [float(v) for v in self.values]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, EmbeddingVector):
            return NotImplemented
        return self.normalized == other.normalized and np.array_equal(
            self.values, other.values
        )

    def __hash__(self) -> int:
        return hash((self.values.tobytes(), self.normalized))

    def __repr__(self) -> str:
        return f"EmbeddingVector(dim={self.dim}, normalized={self.normalized})"


@dataclass(frozen=True)
class CorpusItem:
    """An identified video, text or frame bound to its embedding."""

    id: str
    kind: ItemKind
    embedding: EmbeddingVector

    def __post_init__(self) -> None:
        if not self.id:
            raise EmptyInput("Corpus item id must be non-empty")
        object.__setattr__(self, "kind", ItemKind(self.kind))


@dataclass(frozen=True)
class QuerySpec:
    """A text, video, frame or composed (video + modification) query."""

    kind: QueryKind
    text: Optional[str] = None
    frame_refs: Optional[Tuple[str, ...]] = None
    modification: Optional[str] = None
    order: ComposedOrder = ComposedOrder.VIDEO_FIRST

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", QueryKind(self.kind))
        object.__setattr__(self, "order", ComposedOrder(self.order))
        if self.frame_refs is not None:
            object.__setattr__(self, "frame_refs", tuple(self.frame_refs))

        if self.kind == QueryKind.TEXT and not self.text:
            raise EmptyInput("Text query requires text")
        if self.kind in (QueryKind.VIDEO, QueryKind.FRAME) and not self.frame_refs:
            raise EmptyInput(f"{self.kind.value} query requires frame_refs")
        if self.kind == QueryKind.FRAME and len(self.frame_refs or ()) != 1:
            raise EmptyInput("Frame query takes exactly one frame ref")
        if self.kind == QueryKind.COMPOSED and (
            not self.frame_refs or not self.modification
        ):
            raise EmptyInput("Composed query requires frame_refs and modification")

    @classmethod
    def text_query(cls, text: str) -> "QuerySpec":
        return cls(kind=QueryKind.TEXT, text=text)

    @classmethod
    def video_query(cls, frame_refs: Sequence[str]) -> "QuerySpec":
        return cls(kind=QueryKind.VIDEO, frame_refs=tuple(frame_refs))

    @classmethod
    def frame_query(cls, frame_ref: str) -> "QuerySpec":
        return cls(kind=QueryKind.FRAME, frame_refs=(frame_ref,))

    @property
    def key(self) -> str:
        """Identity of the query used by file-backed lookups and hashing."""
        if self.kind == QueryKind.TEXT:
            return self.text or ""
        refs = "|".join(self.frame_refs or ())
        if self.kind == QueryKind.COMPOSED:
            return f"{refs}\x1f{self.modification}\x1f{self.order.value}"
        return refs

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {"kind": self.kind.value}
        if self.text is not None:
            data["text"] = self.text
        if self.frame_refs is not None:
            data["frame_refs"] = list(self.frame_refs)
        if self.modification is not None:
            data["modification"] = self.modification
        if self.kind == QueryKind.COMPOSED:
            data["order"] = self.order.value
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "QuerySpec":
        refs = data.get("frame_refs")
        return cls(
            kind=QueryKind(data["kind"]),
            text=data.get("text"),
            frame_refs=tuple(refs) if refs is not None else None,
            modification=data.get("modification"),
            order=ComposedOrder(data.get("order", ComposedOrder.VIDEO_FIRST.value)),
        )


def _ranking_key(entry: Tuple[str, float]) -> Tuple[float, str]:
    return (-entry[1], entry[0])


@dataclass(frozen=True)
class RankedList:
    """Ordered (item id, score) results; score desc, ties by ascending id."""

    query_id: str
    entries: Tuple[Tuple[str, float], ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        entries = tuple((str(i), float(s)) for i, s in self.entries)
        ids = [i for i, _ in entries]
        if len(set(ids)) != len(ids):
            raise DuplicateId(f"Ranked list for {self.query_id} repeats an item id")
        for prev, cur in zip(entries, entries[1:]):
            if _ranking_key(prev) > _ranking_key(cur):
                raise ValueError(
                    f"Ranked list for {self.query_id} is not sorted at {cur[0]}"
                )
        object.__setattr__(self, "entries", entries)

    @classmethod
    def from_scores(
        cls, query_id: str, scores: Iterable[Tuple[str, float]]
    ) -> "RankedList":
        """Sort arbitrary (id, score) pairs into a valid ranked list."""
        return cls(query_id=query_id, entries=tuple(sorted(scores, key=_ranking_key)))

    @property
    def item_ids(self) -> List[str]:
        return [i for i, _ in self.entries]

    @property
    def scores(self) -> List[float]:
        return [s for _, s in self.entries]

    def top(self, k: int) -> "RankedList":
        return RankedList(self.query_id, self.entries[:k])

    def rank_of(self, item_id: str) -> Optional[int]:
        """1-based rank of an item, or None when absent."""
        for pos, (i, _) in enumerate(self.entries, start=1):
            if i == item_id:
                return pos
        return None

    def __len__(self) -> int:
        return len(self.entries)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "query_id": self.query_id,
            "ranking": [{"id": i, "score": s} for i, s in self.entries],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "RankedList":
        return cls(
            query_id=data["query_id"],
            entries=tuple((e["id"], e["score"]) for e in data["ranking"]),
        )


@dataclass(frozen=True)
class MomentWindow:
    """A predicted or ground-truth segment in seconds with a score."""

    start_s: float
    end_s: float
    score: float = 1.0

    def __post_init__(self) -> None:
        if self.start_s < 0:
            raise ValueError(f"Window start {self.start_s} is negative")
        if not self.end_s > self.start_s:
            raise ValueError(f"Window end {self.end_s} must exceed start {self.start_s}")
        if not math.isfinite(self.score):
            raise ValueError("Window score must be finite")

    @property
    def length(self) -> float:
        return self.end_s - self.start_s

    def to_dict(self) -> Dict[str, float]:
        return {"start_s": self.start_s, "end_s": self.end_s, "score": self.score}
