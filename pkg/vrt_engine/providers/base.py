"""Provider and scorer interfaces plus the embed request type."""

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple

from ..core.models import ComposedOrder, EmbeddingVector, QueryKind, QuerySpec
from ..errors import EmptyInput
from .prompts import default_prompt_for, get_prompt

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EmbedRequest:
    """A batch of items embedded under one prompt."""

    items: Tuple[QuerySpec, ...]
    prompt_id: str

    def __post_init__(self) -> None:
        object.__setattr__(self, "items", tuple(self.items))
        if not self.items:
            raise EmptyInput("Embed request has no items")
        get_prompt(self.prompt_id)

    @classmethod
    def for_items(
        cls, items: Sequence[QuerySpec], prompt_id: Optional[str] = None
    ) -> "EmbedRequest":
        """Build a request, defaulting the prompt from the first item's kind."""
        if not items:
            raise EmptyInput("Embed request has no items")
        return cls(tuple(items), prompt_id or default_prompt_for(items[0].kind))


def serialize_item(spec: QuerySpec) -> Dict[str, Any]:
    """Wire form of one item for the embedding service.

    Frames travel as single-frame videos. For composed items the key order
    follows the composition order, so video-first and text-first payloads
    differ byte-wise.
    """
    if spec.kind == QueryKind.TEXT:
        return {"kind": "text", "text": spec.text}
    if spec.kind in (QueryKind.VIDEO, QueryKind.FRAME):
        return {"kind": "video", "frame_paths": list(spec.frame_refs or ())}
    if spec.order == ComposedOrder.VIDEO_FIRST:
        return {
            "kind": "composed",
            "frame_paths": list(spec.frame_refs or ()),
            "modification": spec.modification,
        }
    return {
        "kind": "composed",
        "modification": spec.modification,
        "frame_paths": list(spec.frame_refs or ()),
    }


class EmbeddingProvider(ABC):
    """Produces one EmbeddingVector per requested item."""

    name = "provider"

    @abstractmethod
    def embed(self, request: EmbedRequest) -> List[EmbeddingVector]:
        """Embed every item of the request, preserving order."""

    def validate(self, request: EmbedRequest) -> None:
        """Raise if the request cannot be served; default accepts anything."""

    def embed_one(
        self, spec: QuerySpec, prompt_id: Optional[str] = None
    ) -> EmbeddingVector:
        return self.embed(EmbedRequest.for_items([spec], prompt_id))[0]


class Scorer(ABC):
    """Pointwise matching scorer emitting confidences in [0, 1]."""

    name = "scorer"

    @abstractmethod
    def score(self, query: QuerySpec, item_ids: Sequence[str]) -> List[float]:
        """Score each candidate id against the query."""
