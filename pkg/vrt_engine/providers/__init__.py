"""Embedding providers, scorer interface and the prompt registry."""

from .base import EmbeddingProvider, EmbedRequest, Scorer, serialize_item
from .file_provider import FileProvider
from .prompts import PROMPTS, PromptTemplate, default_prompt_for, get_prompt, prompt_segments
from .remote import RemoteEmbeddingProvider, RemoteScorer
from .synthetic import (
    SyntheticProvider,
    SyntheticWorld,
    concept_ref,
    concept_views,
    modification_direction,
    synthetic_pair,
)

__all__ = [
    "EmbedRequest",
    "EmbeddingProvider",
    "FileProvider",
    "PROMPTS",
    "PromptTemplate",
    "RemoteEmbeddingProvider",
    "RemoteScorer",
    "Scorer",
    "SyntheticProvider",
    "SyntheticWorld",
    "concept_ref",
    "concept_views",
    "default_prompt_for",
    "get_prompt",
    "modification_direction",
    "prompt_segments",
    "serialize_item",
    "synthetic_pair",
]
