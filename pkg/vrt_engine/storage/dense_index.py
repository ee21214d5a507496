"""Exact dense cosine search over a corpus of embeddings."""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Dict, List, Sequence, Tuple, Union

import numpy as np

from ..core.models import CorpusItem, EmbeddingVector, ItemKind, RankedList
from ..errors import DimMismatch, DuplicateId, EmptyCorpus, ZeroVector
from .embedding_store import read_store, write_store

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class DenseIndex:
    """Row-major block of unit-normalized 32-bit rows, one per item id."""

    dim: int
    ids: Tuple[str, ...]
    matrix: np.ndarray

    def __post_init__(self) -> None:
        matrix = np.ascontiguousarray(self.matrix, dtype=np.float32)
        if matrix.shape != (len(self.ids), self.dim):
            raise DimMismatch(
                f"Index matrix shape {matrix.shape} does not match "
                f"{len(self.ids)} ids x dim {self.dim}"
            )
        matrix.setflags(write=False)
        object.__setattr__(self, "ids", tuple(self.ids))
        object.__setattr__(self, "matrix", matrix)

    def __len__(self) -> int:
        return len(self.ids)

    @cached_property
    def matrix64(self) -> np.ndarray:
        """Exact 64-bit widening of the stored rows."""
        return self.matrix.astype(np.float64)

    @cached_property
    def _id_array(self) -> np.ndarray:
        return np.array(self.ids, dtype=str)

    @cached_property
    def positions(self) -> Dict[str, int]:
        return {item_id: row for row, item_id in enumerate(self.ids)}

    def vector(self, item_id: str) -> EmbeddingVector:
        """Stored (unit) row of an item, widened to 64-bit."""
        return EmbeddingVector(self.matrix64[self.positions[item_id]])

    def to_items(self, kind: ItemKind = ItemKind.VIDEO) -> List[CorpusItem]:
        return [
            CorpusItem(item_id, kind, EmbeddingVector(row))
            for item_id, row in zip(self.ids, self.matrix64)
        ]


def build_index(items: Sequence[CorpusItem]) -> DenseIndex:
    """Normalize every item and pack the rows into a DenseIndex."""
    if not items:
        raise EmptyCorpus("Cannot build an index from an empty corpus")

    dim = items[0].embedding.dim
    ids: List[str] = []
    seen = set()
    rows = np.empty((len(items), dim), dtype=np.float64)
    for row, item in enumerate(items):
        if item.embedding.dim != dim:
            raise DimMismatch(
                f"Item {item.id} has dim {item.embedding.dim}, index dim is {dim}"
            )
        if item.id in seen:
            raise DuplicateId(f"Duplicate id in corpus: {item.id}")
        norm = item.embedding.norm()
        if norm == 0.0:
            raise ZeroVector(f"Item {item.id} has a zero embedding")
        seen.add(item.id)
        ids.append(item.id)
        rows[row] = item.embedding.values / norm

    index = DenseIndex(dim=dim, ids=tuple(ids), matrix=rows.astype(np.float32))
    logger.info(f"Built dense index with {len(index)} rows of dim {dim}")
    return index


def _unit_query(index: DenseIndex, query: EmbeddingVector) -> np.ndarray:
    if query.dim != index.dim:
        raise DimMismatch(f"Query dim {query.dim} does not match index dim {index.dim}")
    norm = query.norm()
    if norm == 0.0:
        raise ZeroVector("Query embedding is a zero vector")
    return query.values / norm


def _row_scores(index: DenseIndex, unit_query: np.ndarray) -> np.ndarray:
    # One matrix-vector product per query keeps the summation order fixed.
    return index.matrix64 @ unit_query


def top_k(
    index: DenseIndex, scores: np.ndarray, k: int, query_id: str
) -> RankedList:
    """Select the k best (score desc, id asc) entries of a score row."""
    n = scores.shape[0]
    k = min(k, n)
    if k < n:
        # Keep everything tied with the k-th score so the id tie-break is exact.
        threshold = np.partition(scores, n - k)[n - k]
        candidates = np.flatnonzero(scores >= threshold)
    else:
        candidates = np.arange(n)
    order = np.lexsort((index._id_array[candidates], -scores[candidates]))
    chosen = candidates[order[:k]]
    return RankedList(
        query_id=query_id,
        entries=tuple((index.ids[i], float(scores[i])) for i in chosen),
    )


def search(
    index: DenseIndex, query: EmbeddingVector, k: int, query_id: str = "query"
) -> RankedList:
    """Exact top-k cosine search."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    scores = _row_scores(index, _unit_query(index, query))
    return top_k(index, scores, k, query_id)


def similarity_matrix(
    queries: Sequence[EmbeddingVector], index: DenseIndex, jobs: int = 1
) -> np.ndarray:
    """Cosine similarities of every query against every indexed item (m x n)."""
    units = [_unit_query(index, q) for q in queries]
    if jobs > 1 and len(units) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(lambda u: _row_scores(index, u), units))
    else:
        rows = [_row_scores(index, u) for u in units]

    if not rows:
        return np.zeros((0, len(index)), dtype=np.float64)
    return np.vstack(rows)


def save_index(path: Union[str, Path], index: DenseIndex) -> int:
    """Persist the (unit) index rows as a VRTEMB01 store."""
    items = [
        CorpusItem(item_id, ItemKind.VIDEO, EmbeddingVector(row))
        for item_id, row in zip(index.ids, index.matrix64)
    ]
    return write_store(path, items)


def load_index(path: Union[str, Path]) -> DenseIndex:
    """Load a VRTEMB01 store and index it."""
    return build_index(read_store(path))
