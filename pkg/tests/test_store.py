"""Tests for the VRTEMB01 binary store."""

import numpy as np
import pytest

from vrt_engine.core import CorpusItem, EmbeddingVector, ItemKind
from vrt_engine.errors import BadMagic, DimMismatch, DuplicateId, StoreIOError, TruncatedFile
from vrt_engine.storage.embedding_store import (
    HEADER_SIZE,
    MAGIC,
    decode_store,
    encode_store,
    read_store,
    write_store,
)


def make_items(n=3, dim=4, seed=0, normalized=False):
    rng = np.random.default_rng(seed)
    items = []
    for i in range(n):
        values = rng.standard_normal(dim)
        if normalized:
            values = values / np.linalg.norm(values)
        items.append(CorpusItem(f"vid-{i}", ItemKind.VIDEO, EmbeddingVector(values, normalized)))
    return items


class TestEmbeddingStore:
    """Test encoding, decoding and failure modes of the store."""

    def test_header_layout(self):
        """Test magic, dim, count and normalized flag are written as declared."""
        payload = encode_store(make_items(n=2, dim=5, normalized=True))

        assert HEADER_SIZE == 24
        assert payload[:8] == MAGIC
        assert int.from_bytes(payload[8:12], "little") == 5
        assert int.from_bytes(payload[12:20], "little") == 2
        assert payload[20] == 1
        assert payload[21:24] == b"\x00\x00\x00"

    def test_float32_values_survive(self):
        """Test values representable in 32-bit come back bit-exact."""
        values = np.array([0.5, -1.25, 3.0, 0.0])
        items = [CorpusItem("a", ItemKind.TEXT, EmbeddingVector(values))]

        decoded = decode_store(encode_store(items), kind=ItemKind.TEXT)

        assert decoded[0].id == "a"
        assert decoded[0].kind == ItemKind.TEXT
        np.testing.assert_array_equal(decoded[0].embedding.values, values)

    def test_unicode_ids(self, tmp_path):
        items = [CorpusItem("vidéo-ß", ItemKind.VIDEO, EmbeddingVector([1.0, 2.0]))]
        path = tmp_path / "u.bin"
        write_store(path, items)

        assert read_store(path)[0].id == "vidéo-ß"

    def test_empty_store(self, tmp_path):
        path = tmp_path / "empty.bin"
        size = write_store(path, [])

        assert size == HEADER_SIZE
        assert read_store(path) == []

    def test_bad_magic(self):
        payload = bytearray(encode_store(make_items()))
        payload[0:8] = b"NOTMAGIC"

        with pytest.raises(BadMagic):
            decode_store(bytes(payload))

    def test_truncated(self):
        """Test every proper prefix past the magic is reported as truncated."""
        payload = encode_store(make_items(n=2, dim=3))

        with pytest.raises(TruncatedFile):
            decode_store(payload[:HEADER_SIZE - 4])
        with pytest.raises(TruncatedFile):
            decode_store(payload[:-1])
        with pytest.raises(TruncatedFile):
            decode_store(payload[:HEADER_SIZE + 1])

    def test_trailing_bytes_mean_wrong_dim(self):
        payload = encode_store(make_items(n=1, dim=3)) + b"\x00" * 4

        with pytest.raises(DimMismatch):
            decode_store(payload)

    def test_mixed_dims_rejected(self):
        items = [
            CorpusItem("a", ItemKind.VIDEO, EmbeddingVector([1.0, 0.0])),
            CorpusItem("b", ItemKind.VIDEO, EmbeddingVector([1.0, 0.0, 0.0])),
        ]
        with pytest.raises(DimMismatch):
            encode_store(items)

    def test_duplicate_ids_rejected(self):
        items = [
            CorpusItem("a", ItemKind.VIDEO, EmbeddingVector([1.0, 0.0])),
            CorpusItem("a", ItemKind.VIDEO, EmbeddingVector([0.0, 1.0])),
        ]
        with pytest.raises(DuplicateId):
            encode_store(items)

    def test_missing_file(self, tmp_path):
        with pytest.raises(StoreIOError):
            read_store(tmp_path / "absent.bin")
