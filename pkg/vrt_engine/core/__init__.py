"""Core domain types and similarity math."""

from .models import (
    ComposedOrder,
    CorpusItem,
    EmbeddingVector,
    ItemKind,
    MomentWindow,
    QueryKind,
    QuerySpec,
    RankedList,
)
from .similarity import cosine_similarity, interval_iou, l2_normalize, unit_rows

__all__ = [
    "ComposedOrder",
    "CorpusItem",
    "EmbeddingVector",
    "ItemKind",
    "MomentWindow",
    "QueryKind",
    "QuerySpec",
    "RankedList",
    "cosine_similarity",
    "interval_iou",
    "l2_normalize",
    "unit_rows",
]
