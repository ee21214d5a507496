"""Deterministic synthetic benchmarks with known ground truth.

Each generator is a pure function of its arguments. Passing `out_dir`
also writes the fixture with the production formats (VRTEMB01 stores and
JSONL ground truth) so downstream code can be exercised through real files.
"""

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .core.models import CorpusItem, EmbeddingVector, ItemKind, MomentWindow, QuerySpec
from .errors import InvalidConfig, InvalidSegment
from .evaluation.ground_truth import save_moment_gt, save_retrieval_gt, write_jsonl
from .evaluation.metrics import MomentGroundTruth, RetrievalGroundTruth
from .providers.synthetic import SyntheticProvider, SyntheticWorld, compose, concept_ref
from .retrieval.composed import build_composed_spec
from .storage.embedding_store import write_store

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

MODIFICATIONS = (
    "make it snowy",
    "change the dog to a cat",
    "at night",
    "add a second person",
    "turn it into a cartoon",
    "make the car red",
    "move it indoors",
    "in slow motion",
)


@dataclass
class RetrievalFixture:
    world: SyntheticWorld
    queries: List[CorpusItem]
    candidates: List[CorpusItem]
    gt: RetrievalGroundTruth
    paths: Dict[str, Path] = field(default_factory=dict)


def gen_retrieval_fixture(
    seed: int,
    n_concepts: int,
    noise: float,
    latent_dim: int = 16,
    raw_dim: int = 32,
    out_dir: Optional[PathLike] = None,
) -> RetrievalFixture:
    """Paired query/candidate views; query i matches candidate i.

    Both views share one linear map, so in the noiseless limit every query
    equals its candidate and is its nearest neighbour.
    """
    if n_concepts < 2:
        raise InvalidConfig(f"Retrieval fixture needs >= 2 concepts, got {n_concepts}")
    world = SyntheticWorld(seed, latent_dim, raw_dim, noise, n_concepts, view_shift=0.0)
    provider = SyntheticProvider(world)

    queries, candidates, truth = [], [], {}
    for i in range(n_concepts):
        q_id, c_id = concept_ref(i, "q"), concept_ref(i, "c")
        queries.append(CorpusItem(q_id, ItemKind.TEXT, provider.embed_one(QuerySpec.text_query(q_id))))
        candidates.append(
            CorpusItem(c_id, ItemKind.VIDEO, provider.embed_one(QuerySpec.video_query([c_id])))
        )
        truth[q_id] = {c_id}

    fixture = RetrievalFixture(world, queries, candidates, RetrievalGroundTruth.from_mapping(truth))
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        fixture.paths = {
            "queries": out / "queries.bin",
            "candidates": out / "candidates.bin",
            "gt": out / "gt.jsonl",
        }
        write_store(fixture.paths["queries"], queries)
        write_store(fixture.paths["candidates"], candidates)
        save_retrieval_gt(fixture.paths["gt"], fixture.gt)
    logger.info(f"Generated retrieval fixture: seed={seed} concepts={n_concepts} noise={noise}")
    return fixture


@dataclass(frozen=True)
class SegmentSpec:
    """Random placement of one planted segment with a length in [min_len, max_len] frames."""

    min_len: int = 10
    max_len: int = 30


Segments = Union[SegmentSpec, Sequence[Tuple[int, int]]]


@dataclass
class MomentFixture:
    queries: Dict[str, EmbeddingVector]
    frames: Dict[str, List[EmbeddingVector]]
    segments: Dict[str, List[Tuple[int, int]]]
    gt: MomentGroundTruth
    frame_hop_s: float
    duration_s: float
    paths: Dict[str, Path] = field(default_factory=dict)


def _validate_segments(segments: Sequence[Tuple[int, int]], num_frames: int) -> List[Tuple[int, int]]:
    ordered = sorted((int(s), int(e)) for s, e in segments)
    if not ordered:
        raise InvalidSegment("At least one segment must be planted")
    for start, end in ordered:
        if not 0 <= start < end <= num_frames:
            raise InvalidSegment(f"Segment [{start}, {end}) does not fit in [0, {num_frames})")
    for (_, prev_end), (start, _) in zip(ordered, ordered[1:]):
        if start < prev_end:
            raise InvalidSegment(f"Planted segments overlap at frame {start}")
    return ordered


def _unit(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v)


def gen_moment_fixture(
    seed: int,
    n_queries: int,
    num_frames: int,
    segment_spec: Segments = SegmentSpec(),
    snr: float = math.inf,
    dim: int = 32,
    out_dir: Optional[PathLike] = None,
) -> MomentFixture:
    """Frame embeddings that equal the query inside planted segments and are
    orthogonal to it elsewhere, plus isotropic noise of norm about 1/snr.

    Frames are one second apart. The ground truth of a query is its first
    planted segment.
    """
    if n_queries < 1 or num_frames < 1:
        raise InvalidConfig("n_queries and num_frames must be >= 1")
    if not snr > 0:
        raise InvalidConfig(f"snr must be > 0, got {snr}")
    if isinstance(segment_spec, SegmentSpec):
        if not 1 <= segment_spec.min_len <= segment_spec.max_len <= num_frames:
            raise InvalidSegment(
                f"Segment lengths [{segment_spec.min_len}, {segment_spec.max_len}] "
                f"do not fit {num_frames} frames"
            )
    else:
        fixed = _validate_segments(segment_spec, num_frames)

    noise_scale = 0.0 if math.isinf(snr) else 1.0 / (snr * math.sqrt(dim))
    queries, frames, segments, windows = {}, {}, {}, {}
    for n in range(n_queries):
        rng = np.random.default_rng([seed, n])
        query_id = f"moment-{n:04d}"
        if isinstance(segment_spec, SegmentSpec):
            length = int(rng.integers(segment_spec.min_len, segment_spec.max_len + 1))
            start = int(rng.integers(0, num_frames - length + 1))
            planted = [(start, start + length)]
        else:
            planted = fixed

        q = _unit(rng.standard_normal(dim))
        inside = np.zeros(num_frames, dtype=bool)
        for start, end in planted:
            inside[start:end] = True

        rows = []
        for t in range(num_frames):
            if inside[t]:
                row = q.copy()
            else:
                background = rng.standard_normal(dim)
                row = _unit(background - q * (q @ background))
            if noise_scale:
                row = row + noise_scale * rng.standard_normal(dim)
            rows.append(EmbeddingVector(row))

        queries[query_id] = EmbeddingVector(q)
        frames[query_id] = rows
        segments[query_id] = planted
        windows[query_id] = MomentWindow(float(planted[0][0]), float(planted[0][1]))

    fixture = MomentFixture(
        queries, frames, segments, MomentGroundTruth(windows), 1.0, float(num_frames)
    )
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        fixture.paths = {"queries": out / "queries.bin", "gt": out / "gt.jsonl"}
        write_store(
            fixture.paths["queries"],
            [CorpusItem(qid, ItemKind.TEXT, v) for qid, v in queries.items()],
        )
        for qid, rows in frames.items():
            path = out / f"frames-{qid}.bin"
            write_store(
                path,
                [CorpusItem(f"{qid}/frame:{t:05d}", ItemKind.FRAME, v) for t, v in enumerate(rows)],
            )
            fixture.paths[qid] = path
        save_moment_gt(fixture.paths["gt"], fixture.gt)
    logger.info(f"Generated moment fixture: seed={seed} queries={n_queries} T={num_frames} snr={snr}")
    return fixture


@dataclass
class ComposedFixture:
    world: SyntheticWorld
    queries: List[Tuple[str, QuerySpec]]
    corpus: List[CorpusItem]
    gt: RetrievalGroundTruth
    paths: Dict[str, Path] = field(default_factory=dict)


def gen_composed_fixture(
    seed: int,
    n_triplets: int,
    latent_dim: int = 16,
    raw_dim: int = 32,
    out_dir: Optional[PathLike] = None,
) -> ComposedFixture:
    """Source videos, modifications and targets with target = normalize(source + direction(mod)).

    The corpus holds every target and every source video, so a query that
    ignores its modification lands on its own source instead of the target.
    """
    if n_triplets < 1:
        raise InvalidConfig(f"n_triplets must be >= 1, got {n_triplets}")
    world = SyntheticWorld(seed, latent_dim, raw_dim, 0.0, n_triplets, view_shift=0.0)
    provider = SyntheticProvider(world)

    queries, targets, sources, truth = [], [], [], {}
    for i in range(n_triplets):
        source_ref = concept_ref(i, "c")
        modification = f"{MODIFICATIONS[i % len(MODIFICATIONS)]} #{i}"
        source = provider.embed_one(QuerySpec.video_query([source_ref]))
        target = compose(source.values, modification, world.seed)

        query_id = f"composed-{i:04d}"
        target_id = f"target-{i:04d}"
        queries.append((query_id, build_composed_spec([source_ref], modification)))
        targets.append(CorpusItem(target_id, ItemKind.VIDEO, EmbeddingVector(target, normalized=True)))
        sources.append(CorpusItem(f"source-{i:04d}", ItemKind.VIDEO, source))
        truth[query_id] = {target_id}

    fixture = ComposedFixture(
        world, queries, targets + sources, RetrievalGroundTruth.from_mapping(truth)
    )
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        fixture.paths = {
            "corpus": out / "corpus.bin",
            "queries": out / "queries.jsonl",
            "gt": out / "gt.jsonl",
        }
        write_store(fixture.paths["corpus"], fixture.corpus)
        write_jsonl(
            fixture.paths["queries"],
            ({"id": qid, **spec.to_dict()} for qid, spec in queries),
        )
        save_retrieval_gt(fixture.paths["gt"], fixture.gt)
    logger.info(f"Generated composed fixture: seed={seed} triplets={n_triplets}")
    return fixture
