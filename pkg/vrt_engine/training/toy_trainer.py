"""Desk-scale training loops: a linear embedding adapter and a pointwise scorer head.

The adapter maps raw synthetic views into a shared embedding space and is
trained with InfoNCE, optionally in two stages where the second stage
continues on a shifted world with a smaller step. The scorer head is trained
on mined negatives with the weighted BCE + preference objective.
"""

import json
import logging
import math
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.special import expit

from ..core.models import CorpusItem, EmbeddingVector, ItemKind, RankedList
from ..errors import DimMismatch, DivergedLoss, InvalidConfig, StoreIOError
from ..providers.synthetic import SyntheticWorld, concept_ref, concept_views
from ..storage.dense_index import DenseIndex, build_index, search
from .mining import MinerConfig, mine_hard_negative, sample_random_negative
from .objectives import (
    DEFAULT_TEMPERATURE,
    JointLossWeights,
    bce_grad,
    infonce_loss_and_grad,
    joint_loss,
    pair_bce,
    preference_grad,
    preference_loss,
)

logger = logging.getLogger(__name__)

INIT_RANGE = 0.05


@dataclass
class LinearAdapter:
    """Affine map raw_dim -> emb_dim shared by query and candidate views."""

    weight: np.ndarray
    bias: np.ndarray

    def __post_init__(self) -> None:
        self.weight = np.array(self.weight, dtype=np.float64)
        self.bias = np.array(self.bias, dtype=np.float64)
        if self.weight.ndim != 2 or self.bias.shape != (self.weight.shape[1],):
            raise DimMismatch(
                f"Adapter weight {self.weight.shape} and bias {self.bias.shape} disagree"
            )
        if self.emb_dim < 2:
            raise InvalidConfig(f"Adapter emb_dim must be >= 2, got {self.emb_dim}")
        if not (np.all(np.isfinite(self.weight)) and np.all(np.isfinite(self.bias))):
            raise DivergedLoss("Adapter has non-finite parameters")

    @classmethod
    def initialize(
        cls, raw_dim: int, emb_dim: int, rng: np.random.Generator
    ) -> "LinearAdapter":
        weight = rng.uniform(-INIT_RANGE, INIT_RANGE, size=(raw_dim, emb_dim))
        return cls(weight, np.zeros(emb_dim))

    @property
    def raw_dim(self) -> int:
        return self.weight.shape[0]

    @property
    def emb_dim(self) -> int:
        return self.weight.shape[1]

    def encode(self, raw: np.ndarray) -> np.ndarray:
        return np.asarray(raw, dtype=np.float64) @ self.weight + self.bias

    def copy(self) -> "LinearAdapter":
        return LinearAdapter(self.weight.copy(), self.bias.copy())

    def to_dict(self) -> Dict[str, Any]:
        return {"weight": self.weight.tolist(), "bias": self.bias.tolist()}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "LinearAdapter":
        return cls(np.array(data["weight"]), np.array(data["bias"]))


@dataclass
class ToyScorer:
    """Logistic head over [q*c ; |q-c|] of unit embeddings."""

    w: np.ndarray
    b: float = 0.0

    def __post_init__(self) -> None:
        self.w = np.array(self.w, dtype=np.float64)
        self.b = float(self.b)
        if self.w.ndim != 1 or self.w.shape[0] % 2:
            raise DimMismatch(f"Scorer weight must have even length, got {self.w.shape}")
        if not (np.all(np.isfinite(self.w)) and math.isfinite(self.b)):
            raise DivergedLoss("Scorer has non-finite parameters")

    @classmethod
    def zeros(cls, emb_dim: int) -> "ToyScorer":
        return cls(np.zeros(2 * emb_dim), 0.0)

    @property
    def emb_dim(self) -> int:
        return self.w.shape[0] // 2

    @staticmethod
    def features(query: np.ndarray, candidates: np.ndarray) -> np.ndarray:
        q = query / np.linalg.norm(query)
        c = np.atleast_2d(candidates)
        c = c / np.linalg.norm(c, axis=1, keepdims=True)
        return np.hstack([c * q, np.abs(q - c)])

    def score_rows(self, query: np.ndarray, candidates: np.ndarray) -> np.ndarray:
        """Confidences in (0, 1) of one query against candidate rows."""
        if query.shape[-1] != self.emb_dim:
            raise DimMismatch(f"Scorer dim {self.emb_dim} vs query dim {query.shape[-1]}")
        return expit(self.features(query, candidates) @ self.w + self.b)

    def score(self, query: EmbeddingVector, candidate: EmbeddingVector) -> float:
        return float(self.score_rows(query.values, candidate.values)[0])

    def copy(self) -> "ToyScorer":
        return ToyScorer(self.w.copy(), self.b)

    def to_dict(self) -> Dict[str, Any]:
        return {"w": self.w.tolist(), "b": self.b}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ToyScorer":
        return cls(np.array(data["w"]), data["b"])


def save_model(path: Union[str, Path], model: Union[LinearAdapter, ToyScorer]) -> None:
    payload = {"type": type(model).__name__, **model.to_dict()}
    try:
        Path(path).write_text(json.dumps(payload))
    except OSError as e:
        logger.error(f"Failed to write model {path}: {e}")
        raise StoreIOError(f"Cannot write model {path}: {e}") from e
    logger.info(f"Saved {payload['type']} to {path}")


def load_model(path: Union[str, Path]) -> Union[LinearAdapter, ToyScorer]:
    try:
        payload = json.loads(Path(path).read_text())
    except OSError as e:
        logger.error(f"Failed to read model {path}: {e}")
        raise StoreIOError(f"Cannot read model {path}: {e}") from e

    model_type = payload.pop("type", None)
    if model_type == "LinearAdapter":
        return LinearAdapter.from_dict(payload)
    if model_type == "ToyScorer":
        return ToyScorer.from_dict(payload)
    raise InvalidConfig(f"{path} holds an unknown model type: {model_type!r}")


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 30
    batch_size: int = 32
    step_size: float = 0.05
    seed: int = 0
    emb_dim: int = 16
    temperature: float = DEFAULT_TEMPERATURE
    holdout_fraction: float = 0.25
    stage2_world: Optional[SyntheticWorld] = None
    stage2_epochs: Optional[int] = None
    stage2_step_scale: float = 0.1

    def __post_init__(self) -> None:
        if self.epochs < 1:
            raise InvalidConfig(f"epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 2:
            raise InvalidConfig(f"batch_size must be >= 2, got {self.batch_size}")
        if self.step_size < 0 or self.stage2_step_scale < 0:
            raise InvalidConfig("step sizes must be >= 0")
        if self.emb_dim < 2:
            raise InvalidConfig(f"emb_dim must be >= 2, got {self.emb_dim}")
        if not 0 <= self.holdout_fraction < 1:
            raise InvalidConfig(f"holdout_fraction must be in [0, 1), got {self.holdout_fraction}")
        if self.stage2_epochs is not None and self.stage2_epochs < 1:
            raise InvalidConfig(f"stage2_epochs must be >= 1, got {self.stage2_epochs}")

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "TrainConfig":
        unknown = set(data) - {f.name for f in fields(cls)}
        if unknown:
            raise InvalidConfig(f"Unknown TrainConfig keys: {sorted(unknown)}")
        data = dict(data)
        if isinstance(data.get("stage2_world"), dict):
            data["stage2_world"] = SyntheticWorld.from_dict(data["stage2_world"])
        return cls(**data)

    def to_dict(self) -> Dict[str, Any]:
        data = {f.name: getattr(self, f.name) for f in fields(self)}
        if self.stage2_world is not None:
            data["stage2_world"] = self.stage2_world.to_dict()
        return data


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    loss: float
    r_at_1: Optional[float] = None
    stage: int = field(default=1, compare=False)

    def to_dict(self) -> Dict[str, Any]:
        record: Dict[str, Any] = {"epoch": self.epoch, "loss": self.loss}
        if self.r_at_1 is not None:
            record["r_at_1"] = self.r_at_1
        return record


def write_history(path: Union[str, Path], history: Sequence[EpochRecord]) -> None:
    """Write one JSON object per epoch."""
    lines = "".join(json.dumps(record.to_dict()) + "\n" for record in history)
    try:
        Path(path).write_text(lines)
    except OSError as e:
        logger.error(f"Failed to write history {path}: {e}")
        raise StoreIOError(f"Cannot write history {path}: {e}") from e


def split_concepts(num_concepts: int, holdout_fraction: float) -> Tuple[List[int], List[int]]:
    """Training concepts first, the last ceil(n * f) concepts held out."""
    n_hold = math.ceil(num_concepts * holdout_fraction)
    if num_concepts - n_hold < 2:
        raise InvalidConfig(
            f"{num_concepts} concepts leave fewer than 2 for training at holdout {holdout_fraction}"
        )
    return list(range(num_concepts - n_hold)), list(range(num_concepts - n_hold, num_concepts))


def embed_concepts(
    adapter: LinearAdapter, world: SyntheticWorld, view: str, concepts: Sequence[int]
) -> List[CorpusItem]:
    """Adapter embeddings of concept views, keyed by their concept refs."""
    kind = ItemKind.TEXT if view == "q" else ItemKind.VIDEO
    encoded = adapter.encode(concept_views(world, view, concepts))
    return [
        CorpusItem(concept_ref(i, view), kind, EmbeddingVector(row))
        for i, row in zip(concepts, encoded)
    ]


def embedder_loss_and_grad(
    adapter: LinearAdapter, raw_q: np.ndarray, raw_c: np.ndarray, temperature: float
) -> Tuple[float, np.ndarray, np.ndarray]:
    """InfoNCE of one batch of raw views and its gradient in (weight, bias)."""
    report = infonce_loss_and_grad(adapter.encode(raw_q), adapter.encode(raw_c), temperature)
    grad_w = raw_q.T @ report.query_grads + raw_c.T @ report.candidate_grads
    grad_b = report.query_grads.sum(axis=0) + report.candidate_grads.sum(axis=0)
    return report.loss, grad_w, grad_b


def _batches(order: np.ndarray, batch_size: int) -> List[np.ndarray]:
    return [order[i : i + batch_size] for i in range(0, len(order), batch_size)]


def evaluate_embedder_loss(
    adapter: LinearAdapter, raw_q: np.ndarray, raw_c: np.ndarray, cfg: TrainConfig
) -> float:
    """Mean InfoNCE over fixed, unshuffled batches."""
    losses = [
        embedder_loss_and_grad(adapter, raw_q[idx], raw_c[idx], cfg.temperature)[0]
        for idx in _batches(np.arange(raw_q.shape[0]), cfg.batch_size)
    ]
    return float(np.mean(losses))


def heldout_recall_at_1(
    adapter: LinearAdapter, world: SyntheticWorld, concepts: Sequence[int]
) -> Optional[float]:
    """Fraction of held-out query views whose own candidate view ranks first."""
    if not concepts:
        return None
    index = build_index(embed_concepts(adapter, world, "c", concepts))
    hits = 0
    for item in embed_concepts(adapter, world, "q", concepts):
        top = search(index, item.embedding, 1, query_id=item.id)
        hits += top.item_ids[0] == item.id.replace("/view:q", "/view:c")
    return hits / len(concepts)


def _train_stage(
    adapter: LinearAdapter,
    world: SyntheticWorld,
    cfg: TrainConfig,
    epochs: int,
    step_size: float,
    rng: np.random.Generator,
    history: List[EpochRecord],
    stage: int,
) -> None:
    train_idx, hold_idx = split_concepts(world.num_concepts, cfg.holdout_fraction)
    raw_q = concept_views(world, "q", train_idx)
    raw_c = concept_views(world, "c", train_idx)
    if raw_q.shape[1] != adapter.raw_dim:
        raise DimMismatch(f"World raw_dim {raw_q.shape[1]} vs adapter raw_dim {adapter.raw_dim}")

    if stage == 1:
        history.append(
            EpochRecord(
                0,
                evaluate_embedder_loss(adapter, raw_q, raw_c, cfg),
                heldout_recall_at_1(adapter, world, hold_idx),
            )
        )

    first_epoch = history[-1].epoch + 1
    for epoch in range(first_epoch, first_epoch + epochs):
        for idx in _batches(rng.permutation(len(train_idx)), cfg.batch_size):
            loss, grad_w, grad_b = embedder_loss_and_grad(
                adapter, raw_q[idx], raw_c[idx], cfg.temperature
            )
            if not math.isfinite(loss):
                raise DivergedLoss(f"Embedder loss became {loss} in epoch {epoch}")
            adapter.weight -= step_size * grad_w
            adapter.bias -= step_size * grad_b

        epoch_loss = evaluate_embedder_loss(adapter, raw_q, raw_c, cfg)
        if not math.isfinite(epoch_loss):
            raise DivergedLoss(f"Embedder loss became {epoch_loss} after epoch {epoch}")
        r_at_1 = heldout_recall_at_1(adapter, world, hold_idx)
        history.append(EpochRecord(epoch, epoch_loss, r_at_1, stage))
        logger.info(
            f"Embedder stage {stage} epoch {epoch}: loss={epoch_loss:.5f}"
            + (f" heldout R@1={r_at_1:.3f}" if r_at_1 is not None else "")
        )


def train_embedder(
    world: SyntheticWorld, cfg: TrainConfig, adapter: Optional[LinearAdapter] = None
) -> Tuple[LinearAdapter, List[EpochRecord]]:
    """Train (or continue training) a LinearAdapter with InfoNCE.

    History starts with the untrained evaluation as epoch 0. A configured
    stage-2 world continues from the stage-1 weights with the step scaled
    by stage2_step_scale; its epochs keep counting after stage 1.
    """
    rng = np.random.default_rng(cfg.seed)
    if adapter is None:
        adapter = LinearAdapter.initialize(world.raw_dim, cfg.emb_dim, rng)
    else:
        adapter = adapter.copy()

    history: List[EpochRecord] = []
    _train_stage(adapter, world, cfg, cfg.epochs, cfg.step_size, rng, history, stage=1)
    if cfg.stage2_world is not None:
        _train_stage(
            adapter,
            cfg.stage2_world,
            cfg,
            cfg.stage2_epochs or cfg.epochs,
            cfg.step_size * cfg.stage2_step_scale,
            rng,
            history,
            stage=2,
        )
    return adapter, history


@dataclass(frozen=True)
class RerankExample:
    """One query with its ground truth and the negatives drawn for a step."""

    query: np.ndarray
    gt_id: str
    rand_ids: Tuple[str, ...]
    hard_bce_ids: Tuple[str, ...]
    hard_pb_ids: Tuple[str, ...]


def _draw_example(
    query: np.ndarray,
    gt_id: str,
    ranked: RankedList,
    index: DenseIndex,
    miner: MinerConfig,
    rng: np.random.Generator,
) -> RerankExample:
    return RerankExample(
        query=query,
        gt_id=gt_id,
        rand_ids=tuple(sample_random_negative(index.ids, gt_id, rng) for _ in range(miner.n_rand)),
        hard_bce_ids=tuple(
            mine_hard_negative(ranked, gt_id, miner, rng) for _ in range(miner.n_hard_bce)
        ),
        hard_pb_ids=tuple(
            mine_hard_negative(ranked, gt_id, miner, rng) for _ in range(miner.n_hard_pb)
        ),
    )


def rerank_example_loss_and_grad(
    scorer: ToyScorer, weights: JointLossWeights, example: RerankExample, index: DenseIndex
) -> Tuple[float, np.ndarray, float]:
    """Joint loss of one example and its gradient in (w, b)."""
    groups = [(example.gt_id,), example.rand_ids, example.hard_bce_ids, example.hard_pb_ids]
    ids = [item_id for group in groups for item_id in group]
    rows = index.matrix64[[index.positions[item_id] for item_id in ids]]
    phi = scorer.features(example.query, rows)
    s = expit(phi @ scorer.w + scorer.b)

    n_rand, n_bce = len(example.rand_ids), len(example.hard_bce_ids)
    s_gt = float(s[0])
    s_rand = s[1 : 1 + n_rand]
    s_bce = s[1 + n_rand : 1 + n_rand + n_bce]
    s_pb = s[1 + n_rand + n_bce :]

    loss = joint_loss(
        weights,
        pair_bce(s_gt, s_rand),
        pair_bce(s_gt, s_bce),
        float(np.mean([preference_loss(s_gt, x) for x in s_pb])),
    )

    grad_s = np.zeros_like(s)
    grad_s[0] = 0.5 * (weights.rand_bce + weights.hard_bce) * bce_grad(s_gt, 1)
    for j, x in enumerate(s_rand, start=1):
        grad_s[j] = 0.5 * weights.rand_bce * bce_grad(float(x), 0) / n_rand
    for j, x in enumerate(s_bce, start=1 + n_rand):
        grad_s[j] = 0.5 * weights.hard_bce * bce_grad(float(x), 0) / n_bce
    for j, x in enumerate(s_pb, start=1 + n_rand + n_bce):
        g_gt, g_neg = preference_grad(s_gt, float(x))
        grad_s[0] += weights.preference * g_gt / len(s_pb)
        grad_s[j] = weights.preference * g_neg / len(s_pb)

    grad_z = grad_s * s * (1.0 - s)
    return loss, phi.T @ grad_z, float(grad_z.sum())


def train_reranker(
    queries: Sequence[EmbeddingVector],
    gt_ids: Sequence[str],
    index: DenseIndex,
    miner: MinerConfig,
    weights: JointLossWeights,
    cfg: TrainConfig,
) -> Tuple[ToyScorer, List[EpochRecord]]:
    """Train a zero-initialized ToyScorer on negatives mined from the index.

    Every step draws fresh random and hard negatives per example. History
    losses are measured on one fixed draw so epochs are comparable.
    """
    if len(queries) != len(gt_ids):
        raise DimMismatch(f"{len(queries)} queries but {len(gt_ids)} ground-truth ids")
    rng = np.random.default_rng([cfg.seed, miner.seed])
    query_rows = [q.values for q in queries]
    ranked = [
        search(index, q, miner.k_top, query_id=gt) for q, gt in zip(queries, gt_ids)
    ]

    eval_rng = np.random.default_rng([cfg.seed, miner.seed, 1])
    eval_set = [
        _draw_example(q, gt, r, index, miner, eval_rng)
        for q, gt, r in zip(query_rows, gt_ids, ranked)
    ]

    def evaluate(current: ToyScorer) -> float:
        return float(
            np.mean([rerank_example_loss_and_grad(current, weights, ex, index)[0] for ex in eval_set])
        )

    scorer = ToyScorer.zeros(index.dim)
    history = [EpochRecord(0, evaluate(scorer))]
    for epoch in range(1, cfg.epochs + 1):
        for idx in _batches(rng.permutation(len(query_rows)), cfg.batch_size):
            grad_w = np.zeros_like(scorer.w)
            grad_b = 0.0
            for i in idx:
                example = _draw_example(query_rows[i], gt_ids[i], ranked[i], index, miner, rng)
                loss, g_w, g_b = rerank_example_loss_and_grad(scorer, weights, example, index)
                if not math.isfinite(loss):
                    raise DivergedLoss(f"Reranker loss became {loss} in epoch {epoch}")
                grad_w += g_w
                grad_b += g_b
            scorer.w -= cfg.step_size * grad_w / len(idx)
            scorer.b -= cfg.step_size * grad_b / len(idx)

        epoch_loss = evaluate(scorer)
        history.append(EpochRecord(epoch, epoch_loss))
        logger.info(f"Reranker epoch {epoch}: joint loss={epoch_loss:.5f}")

    return scorer, history


def ordering_accuracy(
    scorer: ToyScorer,
    queries: Sequence[EmbeddingVector],
    gt_ids: Sequence[str],
    index: DenseIndex,
    miner: MinerConfig,
    seed: int = 0,
) -> float:
    """Fraction of queries whose ground truth outscores one mined hard negative."""
    rng = np.random.default_rng(seed)
    wins = 0
    for q, gt in zip(queries, gt_ids):
        ranked = search(index, q, miner.k_top, query_id=gt)
        negative = mine_hard_negative(ranked, gt, miner, rng)
        rows = np.vstack([index.vector(gt).values, index.vector(negative).values])
        s_gt, s_neg = scorer.score_rows(q.values, rows)
        wins += s_gt > s_neg
    return wins / len(queries)
