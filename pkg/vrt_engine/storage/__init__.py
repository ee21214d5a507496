"""Embedding storage: VRTEMB01 files and the dense search index."""

from .dense_index import (
    DenseIndex,
    build_index,
    load_index,
    save_index,
    search,
    similarity_matrix,
)
from .embedding_store import decode_store, encode_store, read_store, write_store

__all__ = [
    "DenseIndex",
    "build_index",
    "decode_store",
    "encode_store",
    "load_index",
    "read_store",
    "save_index",
    "search",
    "similarity_matrix",
    "write_store",
]
