"""Deterministic synthetic embedder standing in for the multimodal backbone.

Concepts are unit latent vectors z_i. A query view is A_q z_i + noise and a
candidate view is A_c z_i + noise, where A_q and A_c share a common random
map and differ by a per-view perturbation. Everything is derived from the
world seed, so the same world always produces the same bytes.
"""

import hashlib
import logging
import re
from dataclasses import asdict, dataclass, fields
from functools import lru_cache
from typing import Any, Dict, List, Optional, Protocol, Sequence, Tuple

import numpy as np

from ..core.models import EmbeddingVector, QueryKind, QuerySpec
from ..errors import EmptyInput, IndexOutOfRange, InvalidConfig
from .base import EmbeddingProvider, EmbedRequest

logger = logging.getLogger(__name__)

CONCEPT_REF = re.compile(r"^concept:(\d+)/view:([qc])$")

# Stream tags mixed into the seed sequence, one per random source.
_SHARED_MAP, _QUERY_MAP, _CANDIDATE_MAP, _LATENT, _NOISE, _HASHED, _DIRECTION = range(7)
_VIEW_CODES = {"q": 0, "c": 1}

COMPOSITIONS = ("follow", "ignore_modification")


@dataclass(frozen=True)
class SyntheticWorld:
    """Parameters of a synthetic paired-embedding world."""

    seed: int
    latent_dim: int
    raw_dim: int
    noise_sigma: float
    num_concepts: int
    view_shift: float = 0.5
    identity_maps: bool = False

    def __post_init__(self) -> None:
        if not 0 <= self.seed < 2**64:
            raise InvalidConfig(f"seed must be a 64-bit unsigned int, got {self.seed}")
        if self.latent_dim < 1 or self.raw_dim < 1 or self.num_concepts < 1:
            raise InvalidConfig("latent_dim, raw_dim and num_concepts must be positive")
        if self.raw_dim < self.latent_dim:
            raise InvalidConfig(
                f"raw_dim {self.raw_dim} must be >= latent_dim {self.latent_dim}"
            )
        if self.noise_sigma < 0:
            raise InvalidConfig(f"noise_sigma must be >= 0, got {self.noise_sigma}")
        if self.identity_maps and self.raw_dim != self.latent_dim:
            raise InvalidConfig("identity_maps requires raw_dim == latent_dim")

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "SyntheticWorld":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise InvalidConfig(f"Unknown SyntheticWorld keys: {sorted(unknown)}")
        return cls(**data)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def _rng(world: SyntheticWorld, *stream: int) -> np.random.Generator:
    return np.random.default_rng([world.seed, *stream])


@lru_cache(maxsize=32)
def view_maps(world: SyntheticWorld) -> Tuple[np.ndarray, np.ndarray]:
    """The fixed linear maps (A_q, A_c), each raw_dim x latent_dim."""
    if world.identity_maps:
        eye = np.eye(world.raw_dim)
        eye.setflags(write=False)
        return eye, eye

    shape = (world.raw_dim, world.latent_dim)
    scale = 1.0 / np.sqrt(world.latent_dim)
    shared = _rng(world, _SHARED_MAP).standard_normal(shape) * scale
    a_q = shared + world.view_shift * _rng(world, _QUERY_MAP).standard_normal(shape) * scale
    a_c = shared + world.view_shift * _rng(world, _CANDIDATE_MAP).standard_normal(shape) * scale
    a_q.setflags(write=False)
    a_c.setflags(write=False)
    return a_q, a_c


def concept_latent(world: SyntheticWorld, concept_index: int) -> np.ndarray:
    _check_concept(world, concept_index)
    z = _rng(world, _LATENT, concept_index).standard_normal(world.latent_dim)
    return z / np.linalg.norm(z)


def concept_view(world: SyntheticWorld, concept_index: int, view: str) -> np.ndarray:
    """Raw view ("q" or "c") of one concept."""
    a_q, a_c = view_maps(world)
    matrix = a_q if view == "q" else a_c
    raw = matrix @ concept_latent(world, concept_index)
    if world.noise_sigma > 0:
        noise = _rng(world, _NOISE, concept_index, _VIEW_CODES[view]).standard_normal(
            world.raw_dim
        )
        raw = raw + world.noise_sigma * noise
    return raw


def synthetic_pair(
    world: SyntheticWorld, concept_index: int
) -> Tuple[EmbeddingVector, EmbeddingVector]:
    """Query and candidate views of one concept."""
    return (
        EmbeddingVector(concept_view(world, concept_index, "q")),
        EmbeddingVector(concept_view(world, concept_index, "c")),
    )


def concept_views(
    world: SyntheticWorld, view: str, concepts: Optional[Sequence[int]] = None
) -> np.ndarray:
    """Stack the raw views of the given concepts (default: all) into a matrix."""
    indices = range(world.num_concepts) if concepts is None else concepts
    return np.vstack([concept_view(world, i, view) for i in indices])


def concept_ref(concept_index: int, view: str) -> str:
    return f"concept:{concept_index}/view:{view}"


def _check_concept(world: SyntheticWorld, concept_index: int) -> None:
    if not 0 <= concept_index < world.num_concepts:
        raise IndexOutOfRange(
            f"Concept {concept_index} outside [0, {world.num_concepts})"
        )


def hashed_gaussian(seed: int, stream: int, key: str, dim: int) -> np.ndarray:
    """Standard normal vector seeded by the SHA-256 of a key."""
    digest = hashlib.sha256(key.encode("utf-8")).digest()
    words = [int.from_bytes(digest[i : i + 4], "little") for i in range(0, 32, 4)]
    return np.random.default_rng([seed, stream, *words]).standard_normal(dim)


def modification_direction(seed: int, modification: str, dim: int) -> np.ndarray:
    """Unit direction a modification text pushes a source embedding along."""
    direction = hashed_gaussian(seed, _DIRECTION, modification, dim)
    return direction / np.linalg.norm(direction)


def compose(
    source: np.ndarray, modification: str, seed: int
) -> np.ndarray:
    """normalize(normalize(source) + direction(modification))."""
    unit = source / np.linalg.norm(source)
    moved = unit + modification_direction(seed, modification, unit.shape[0])
    return moved / np.linalg.norm(moved)


class VectorAdapter(Protocol):
    def encode(self, raw: np.ndarray) -> np.ndarray:
        ...


class SyntheticProvider(EmbeddingProvider):
    """Embeds items of a SyntheticWorld, optionally through a trained adapter."""

    name = "synthetic"

    def __init__(
        self,
        world: SyntheticWorld,
        adapter: Optional[VectorAdapter] = None,
        composition: str = "follow",
    ) -> None:
        if composition not in COMPOSITIONS:
            raise InvalidConfig(
                f"composition must be one of {COMPOSITIONS}, got {composition}"
            )
        self.world = world
        self.adapter = adapter
        self.composition = composition

    def embed(self, request: EmbedRequest) -> List[EmbeddingVector]:
        self.validate(request)
        vectors = [self._embed_item(spec, request.prompt_id) for spec in request.items]
        logger.debug(f"Synthetic provider embedded {len(vectors)} items")
        return vectors

    def validate(self, request: EmbedRequest) -> None:
        for spec in request.items:
            for ref in spec.frame_refs or ():
                self._concept_of(ref)

    def _concept_of(self, ref: str) -> Optional[Tuple[int, str]]:
        match = CONCEPT_REF.match(ref)
        if not match:
            return None
        index = int(match.group(1))
        _check_concept(self.world, index)
        return index, match.group(2)

    def _raw_ref(self, ref: str, prompt_id: str) -> np.ndarray:
        concept = self._concept_of(ref)
        if concept is not None:
            return concept_view(self.world, *concept)
        return hashed_gaussian(
            self.world.seed, _HASHED, f"{prompt_id}\x1f{ref}", self.world.raw_dim
        )

    def _raw_video(self, refs: Sequence[str], prompt_id: str) -> np.ndarray:
        if not refs:
            raise EmptyInput("Video item has no frames")
        frames = [self._raw_ref(ref, prompt_id) for ref in refs]
        return frames[0] if len(frames) == 1 else np.mean(frames, axis=0)

    def _encode(self, raw: np.ndarray) -> np.ndarray:
        if self.adapter is None:
            return raw
        return np.asarray(self.adapter.encode(raw), dtype=np.float64)

    def _embed_item(self, spec: QuerySpec, prompt_id: str) -> EmbeddingVector:
        if spec.kind == QueryKind.TEXT:
            return EmbeddingVector(self._encode(self._raw_ref(spec.text or "", prompt_id)))

        if spec.kind in (QueryKind.VIDEO, QueryKind.FRAME):
            return EmbeddingVector(self._encode(self._raw_video(spec.frame_refs, prompt_id)))

        # Composed: the source video is embedded as a plain video.
        source = self._encode(self._raw_video(spec.frame_refs, "embed_video"))
        if self.composition == "ignore_modification":
            return EmbeddingVector(source)
        return EmbeddingVector(
            compose(source, spec.modification or "", self.world.seed), normalized=True
        )
