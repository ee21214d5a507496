"""Two-stage video retrieval and zero-shot moment localization engine."""

from .core import CorpusItem, EmbeddingVector, MomentWindow, QuerySpec, RankedList
from .errors import VrtError

__version__ = "0.1.0"

__all__ = [
    "CorpusItem",
    "EmbeddingVector",
    "MomentWindow",
    "QuerySpec",
    "RankedList",
    "VrtError",
    "__version__",
]
