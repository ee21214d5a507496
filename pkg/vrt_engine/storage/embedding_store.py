"""VRTEMB01 binary embedding store.

Layout (all little-endian):

    magic      8 bytes   b"VRTEMB01"
    dim        u32
    count      u64
    normalized u8        1 iff every stored vector is unit-norm
    padding    3 bytes   zero
    records    count x (u16 id length, UTF-8 id, dim x f32)

The header is 24 bytes. Vectors are stored in 32-bit and widened to 64-bit
on read, which is exact.
"""

import logging
import struct
from pathlib import Path
from typing import List, Sequence, Union

import numpy as np

from ..core.models import CorpusItem, EmbeddingVector, ItemKind
from ..errors import BadMagic, DimMismatch, DuplicateId, StoreIOError, TruncatedFile

logger = logging.getLogger(__name__)

MAGIC = b"VRTEMB01"
HEADER = struct.Struct("<8sIQB3x")
HEADER_SIZE = HEADER.size  # 24
ID_LENGTH = struct.Struct("<H")
FLOAT_DTYPE = np.dtype("<f4")


def encode_store(items: Sequence[CorpusItem]) -> bytes:
    """Serialize corpus items into VRTEMB01 bytes."""
    dim = items[0].embedding.dim if items else 0
    seen = set()
    for item in items:
        if item.embedding.dim != dim:
            raise DimMismatch(
                f"Item {item.id} has dim {item.embedding.dim}, store dim is {dim}"
            )
        if item.id in seen:
            raise DuplicateId(f"Duplicate id in store: {item.id}")
        seen.add(item.id)

    normalized = bool(items) and all(item.embedding.normalized for item in items)
    chunks = [HEADER.pack(MAGIC, dim, len(items), int(normalized))]
    for item in items:
        raw_id = item.id.encode("utf-8")
        if len(raw_id) > 0xFFFF:
            raise ValueError(f"Item id too long for store: {item.id[:32]}...")
        chunks.append(ID_LENGTH.pack(len(raw_id)))
        chunks.append(raw_id)
        chunks.append(item.embedding.values.astype(FLOAT_DTYPE).tobytes())
    return b"".join(chunks)


def decode_store(data: bytes, kind: ItemKind = ItemKind.VIDEO) -> List[CorpusItem]:
    """Parse VRTEMB01 bytes; every item gets the given kind."""
    prefix = data[: len(MAGIC)]
    if prefix != MAGIC[: len(prefix)]:
        raise BadMagic("Not a VRTEMB01 store")
    if len(data) < HEADER_SIZE:
        raise TruncatedFile(f"Store header needs {HEADER_SIZE} bytes, got {len(data)}")

    _, dim, count, normalized_flag = HEADER.unpack_from(data, 0)
    if count and dim == 0:
        raise DimMismatch("Store declares records but dim 0")
    normalized = normalized_flag == 1
    vector_size = dim * FLOAT_DTYPE.itemsize

    items: List[CorpusItem] = []
    seen = set()
    offset = HEADER_SIZE
    for index in range(count):
        if offset + ID_LENGTH.size > len(data):
            raise TruncatedFile(f"Store ended before record {index} of {count}")
        (id_length,) = ID_LENGTH.unpack_from(data, offset)
        offset += ID_LENGTH.size
        end = offset + id_length + vector_size
        if end > len(data):
            raise TruncatedFile(f"Store ended inside record {index} of {count}")

        item_id = data[offset : offset + id_length].decode("utf-8")
        offset += id_length
        values = np.frombuffer(data, dtype=FLOAT_DTYPE, count=dim, offset=offset)
        offset += vector_size

        if item_id in seen:
            raise DuplicateId(f"Duplicate id in store: {item_id}")
        seen.add(item_id)
        items.append(
            CorpusItem(
                id=item_id,
                kind=kind,
                embedding=EmbeddingVector(values.astype(np.float64), normalized),
            )
        )

    if offset != len(data):
        raise DimMismatch(
            f"Store has {len(data) - offset} trailing bytes; header dim {dim} is wrong"
        )
    return items


def write_store(path: Union[str, Path], items: Sequence[CorpusItem]) -> int:
    """Write items to a VRTEMB01 file and return the byte count."""
    payload = encode_store(items)
    try:
        Path(path).write_bytes(payload)
    except OSError as e:
        logger.error(f"Failed to write store {path}: {e}")
        raise StoreIOError(f"Cannot write store {path}: {e}") from e

    logger.info(f"Wrote {len(items)} embeddings to {path} ({len(payload)} bytes)")
    return len(payload)


def read_store(
    path: Union[str, Path], kind: ItemKind = ItemKind.VIDEO
) -> List[CorpusItem]:
    """Read a VRTEMB01 file."""
    try:
        data = Path(path).read_bytes()
    except OSError as e:
        logger.error(f"Failed to read store {path}: {e}")
        raise StoreIOError(f"Cannot read store {path}: {e}") from e

    items = decode_store(data, kind=kind)
    logger.info(f"Read {len(items)} embeddings from {path}")
    return items
