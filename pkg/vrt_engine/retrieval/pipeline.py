"""Retrieve-then-rerank flow over a dense index."""

import logging
from dataclasses import asdict, dataclass, fields
from enum import Enum
from typing import Any, Callable, Dict, List, Optional, Protocol, Sequence, Tuple

import numpy as np
from scipy.special import softmax

from ..core.models import EmbeddingVector, QueryKind, QuerySpec, RankedList
from ..errors import (
    EmptyInput,
    InvalidConfig,
    MalformedResponse,
    NonPositiveTemperature,
    ScoreOutOfRange,
    ScorerUnavailable,
)
from ..providers.base import EmbeddingProvider, EmbedRequest, Scorer
from ..providers.prompts import default_prompt_for
from ..storage.dense_index import DenseIndex, search, similarity_matrix

logger = logging.getLogger(__name__)

SCORE_TOLERANCE = 1e-9


class ScorerKind(str, Enum):
    NONE = "none"
    TOY = "toy"
    REMOTE = "remote"


@dataclass(frozen=True)
class PipelineConfig:
    k_candidates: int = 50
    use_dual_softmax: bool = True
    ds_temperature: float = 100.0
    scorer: ScorerKind = ScorerKind.NONE
    k_rerank: Optional[int] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "scorer", ScorerKind(self.scorer))
        if self.k_candidates < 1:
            raise InvalidConfig(f"k_candidates must be >= 1, got {self.k_candidates}")
        if self.k_rerank is not None and not 1 <= self.k_rerank <= self.k_candidates:
            raise InvalidConfig(
                f"k_rerank must be in [1, k_candidates], got {self.k_rerank}"
            )
        if not self.ds_temperature > 0:
            raise NonPositiveTemperature(
                f"ds_temperature must be > 0, got {self.ds_temperature}"
            )

    @property
    def rerank_depth(self) -> int:
        return self.k_rerank or self.k_candidates

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "PipelineConfig":
        unknown = set(data) - {f.name for f in fields(cls)}
        if unknown:
            raise InvalidConfig(f"Unknown PipelineConfig keys: {sorted(unknown)}")
        return cls(**data)

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["scorer"] = self.scorer.value
        return data


def dual_softmax(similarities: np.ndarray, temperature: float) -> np.ndarray:
    """Row softmax times column softmax of temperature * S."""
    if not temperature > 0:
        raise NonPositiveTemperature(f"Dual-softmax temperature must be > 0, got {temperature}")
    logits = temperature * np.asarray(similarities, dtype=np.float64)
    if not np.all(np.isfinite(logits)):
        raise ValueError("Similarity matrix contains non-finite entries")
    return softmax(logits, axis=1) * softmax(logits, axis=0)


def rerank(
    candidates: RankedList,
    query: QuerySpec,
    scorer: Optional[Scorer],
    cfg: Optional[PipelineConfig] = None,
) -> RankedList:
    """Reorder candidates by scorer confidence; similarity scores are discarded."""
    if scorer is None:
        raise ScorerUnavailable("No scorer configured for reranking")
    if not len(candidates):
        raise EmptyInput(f"No candidates to rerank for {candidates.query_id}")

    ids = candidates.item_ids
    scores = list(scorer.score(query, ids))
    if len(scores) != len(ids):
        raise MalformedResponse(f"Scorer returned {len(scores)} scores for {len(ids)} candidates")
    for item_id, score in zip(ids, scores):
        if not -SCORE_TOLERANCE <= score <= 1.0 + SCORE_TOLERANCE:
            raise ScoreOutOfRange(f"Scorer gave {score} for {item_id}; expected [0, 1]")
    return RankedList.from_scores(candidates.query_id, zip(ids, (float(s) for s in scores)))


def rerank_head(
    candidates: RankedList,
    query: QuerySpec,
    scorer: Optional[Scorer],
    depth: int,
    cfg: Optional[PipelineConfig] = None,
) -> RankedList:
    """Rerank the first `depth` candidates and keep the rest in their prior order.

    Tail entries score head_min - 1, head_min - 2, ... so they sit below every
    reranked item; only the head carries scorer confidences.
    """
    head = rerank(candidates.top(depth), query, scorer, cfg)
    tail = candidates.item_ids[depth:]
    if not tail:
        return head
    floor = min(head.scores)
    entries = head.entries + tuple(
        (item_id, floor - offset) for offset, item_id in enumerate(tail, start=1)
    )
    return RankedList(candidates.query_id, entries)


def _embed_queries(
    provider: EmbeddingProvider, queries: Sequence[QuerySpec]
) -> List[EmbeddingVector]:
    """Embed queries with one request per kind, preserving input order."""
    vectors: List[Optional[EmbeddingVector]] = [None] * len(queries)
    for kind in QueryKind:
        positions = [i for i, q in enumerate(queries) if q.kind == kind]
        if not positions:
            continue
        request = EmbedRequest([queries[i] for i in positions], default_prompt_for(kind))
        for i, vector in zip(positions, provider.embed(request)):
            vectors[i] = vector
    return vectors


def _finish(
    ranked: RankedList,
    query: QuerySpec,
    scorer: Optional[Scorer],
    cfg: PipelineConfig,
) -> RankedList:
    if cfg.scorer == ScorerKind.NONE:
        return ranked
    return rerank_head(ranked, query, scorer, cfg.rerank_depth, cfg)


def retrieve(
    index: DenseIndex,
    query: QuerySpec,
    provider: EmbeddingProvider,
    cfg: PipelineConfig,
    scorer: Optional[Scorer] = None,
    query_id: Optional[str] = None,
) -> RankedList:
    """Single-query retrieval; dual-softmax needs a batch and is skipped here."""
    embedding = _embed_queries(provider, [query])[0]
    ranked = search(index, embedding, cfg.k_candidates, query_id=query_id or query.key)
    return _finish(ranked, query, scorer, cfg)


def retrieve_batch(
    index: DenseIndex,
    queries: Sequence[Tuple[str, QuerySpec]],
    provider: EmbeddingProvider,
    cfg: PipelineConfig,
    scorer: Optional[Scorer] = None,
    jobs: int = 1,
) -> List[RankedList]:
    """Retrieve for a batch of (query_id, spec) pairs.

    With dual-softmax enabled, each query's top-K is re-ordered by its row of
    the dual-softmax matrix over the batch x union-of-candidates block.
    """
    if not queries:
        return []
    specs = [spec for _, spec in queries]
    embeddings = _embed_queries(provider, specs)
    ranked = [
        search(index, emb, cfg.k_candidates, query_id=qid)
        for (qid, _), emb in zip(queries, embeddings)
    ]

    if cfg.use_dual_softmax and len(queries) > 1:
        union = sorted({item_id for r in ranked for item_id in r.item_ids}, key=index.positions.get)
        columns = np.array([index.positions[item_id] for item_id in union])
        col_of = {item_id: j for j, item_id in enumerate(union)}
        block = similarity_matrix(embeddings, index, jobs=jobs)[:, columns]
        prior = dual_softmax(block, cfg.ds_temperature)
        ranked = [
            RankedList.from_scores(r.query_id, ((i, float(prior[row, col_of[i]])) for i in r.item_ids))
            for row, r in enumerate(ranked)
        ]
        logger.debug(f"Dual-softmax re-ordered {len(ranked)} queries over {len(union)} candidates")

    results = [_finish(r, spec, scorer, cfg) for r, spec in zip(ranked, specs)]
    logger.info(f"Retrieved {len(results)} queries (scorer={cfg.scorer.value})")
    return results


class RowScorer(Protocol):
    def score_rows(self, query: np.ndarray, candidates: np.ndarray) -> np.ndarray:
        ...


class EmbeddingScorer(Scorer):
    """Scores candidates with a ToyScorer head over query and indexed embeddings."""

    name = "toy"

    def __init__(
        self, head: RowScorer, index: DenseIndex, provider: EmbeddingProvider
    ) -> None:
        self.head = head
        self.index = index
        self.provider = provider

    def score(self, query: QuerySpec, item_ids: Sequence[str]) -> List[float]:
        if not item_ids:
            return []
        embedding = self.provider.embed_one(query)
        rows = np.vstack([self.index.vector(item_id).values for item_id in item_ids])
        return [float(s) for s in self.head.score_rows(embedding.values, rows)]


class CallableScorer(Scorer):
    """Wraps a plain function of (query, item_id) -> score."""

    name = "callable"

    def __init__(self, fn: Callable[[QuerySpec, str], float]) -> None:
        self.fn = fn

    def score(self, query: QuerySpec, item_ids: Sequence[str]) -> List[float]:
        return [float(self.fn(query, item_id)) for item_id in item_ids]
