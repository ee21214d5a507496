"""Provider that serves precomputed embeddings from VRTEMB01 stores."""

import logging
from pathlib import Path
from typing import Dict, Iterable, List, Union

from ..core.models import CorpusItem, EmbeddingVector, QueryKind, QuerySpec
from ..errors import DimMismatch, UnresolvableItem
from ..storage.embedding_store import read_store
from .base import EmbeddingProvider, EmbedRequest

logger = logging.getLogger(__name__)


class FileProvider(EmbeddingProvider):
    """Looks items up by key: the text for text items, the frame refs otherwise.

    Multi-frame videos resolve to the id formed by joining their refs with
    "|". Composed items resolve by their full composed key.
    """

    name = "file"

    def __init__(self, items: Iterable[CorpusItem]) -> None:
        self._vectors: Dict[str, EmbeddingVector] = {}
        dim = None
        for item in items:
            if dim is not None and item.embedding.dim != dim:
                raise DimMismatch(f"Item {item.id} has dim {item.embedding.dim}, expected {dim}")
            dim = item.embedding.dim
            self._vectors[item.id] = item.embedding
        self.dim = dim

    @classmethod
    def from_paths(cls, *paths: Union[str, Path]) -> "FileProvider":
        items: List[CorpusItem] = []
        for path in paths:
            items.extend(read_store(path))
        logger.info(f"File provider loaded {len(items)} embeddings from {len(paths)} stores")
        return cls(items)

    def __contains__(self, key: str) -> bool:
        return key in self._vectors

    def validate(self, request: EmbedRequest) -> None:
        missing = [spec.key for spec in request.items if spec.key not in self._vectors]
        if missing:
            raise UnresolvableItem(f"No stored embedding for: {missing[:5]}")

    def embed(self, request: EmbedRequest) -> List[EmbeddingVector]:
        self.validate(request)
        return [self._vectors[spec.key] for spec in request.items]

    def lookup(self, item_id: str) -> EmbeddingVector:
        try:
            return self._vectors[item_id]
        except KeyError:
            raise UnresolvableItem(f"No stored embedding for: {item_id}") from None

    def text_spec(self, item_id: str) -> QuerySpec:
        """A text query whose key is a stored id."""
        self.lookup(item_id)
        return QuerySpec(kind=QueryKind.TEXT, text=item_id)
