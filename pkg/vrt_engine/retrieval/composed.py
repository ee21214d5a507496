"""Composed (source video + modification text) retrieval."""

import json
import logging
from typing import Optional, Sequence

from ..core.models import ComposedOrder, QueryKind, QuerySpec, RankedList
from ..errors import EmptyInput
from ..providers.base import EmbeddingProvider, serialize_item
from ..providers.prompts import get_prompt, prompt_segments
from ..storage.dense_index import DenseIndex, search

logger = logging.getLogger(__name__)

COMPOSED_PROMPT = "embed_composed"


def build_composed_spec(
    frame_refs: Sequence[str],
    modification: str,
    order: ComposedOrder = ComposedOrder.VIDEO_FIRST,
) -> QuerySpec:
    """Composed query; video-first places the frames before the modification."""
    if not frame_refs:
        raise EmptyInput("Composed query needs at least one source frame")
    if not modification or not modification.strip():
        raise EmptyInput("Composed query needs a modification text")
    return QuerySpec(
        kind=QueryKind.COMPOSED,
        frame_refs=tuple(frame_refs),
        modification=modification,
        order=order,
    )


def composed_payload(spec: QuerySpec) -> bytes:
    """Canonical bytes of what the service receives for a composed query."""
    template = get_prompt(COMPOSED_PROMPT)
    body = {
        "system": template.system,
        "segments": prompt_segments(spec, COMPOSED_PROMPT),
        "item": serialize_item(spec),
    }
    return json.dumps(body, ensure_ascii=False).encode("utf-8")


def composed_retrieve(
    index: DenseIndex,
    spec: QuerySpec,
    provider: EmbeddingProvider,
    k: int,
    query_id: Optional[str] = None,
) -> RankedList:
    """Embed with the composed prompt and run plain top-k search (no reranking)."""
    if spec.kind != QueryKind.COMPOSED:
        raise ValueError(f"composed_retrieve needs a composed query, got {spec.kind.value}")
    embedding = provider.embed_one(spec, COMPOSED_PROMPT)
    return search(index, embedding, k, query_id=query_id or spec.key)
