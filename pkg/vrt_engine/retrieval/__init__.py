"""Corpus retrieval: embedding search, dual-softmax, reranking, composed queries."""

from .composed import build_composed_spec, composed_payload, composed_retrieve
from .pipeline import (
    CallableScorer,
    EmbeddingScorer,
    PipelineConfig,
    ScorerKind,
    dual_softmax,
    rerank,
    rerank_head,
    retrieve,
    retrieve_batch,
)

__all__ = [
    "CallableScorer",
    "EmbeddingScorer",
    "PipelineConfig",
    "ScorerKind",
    "build_composed_spec",
    "composed_payload",
    "composed_retrieve",
    "dual_softmax",
    "rerank",
    "rerank_head",
    "retrieve",
    "retrieve_batch",
]
