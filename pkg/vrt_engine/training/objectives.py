"""Loss kernels and their analytical gradients.

Three objectives are provided: the in-batch InfoNCE contrastive loss used to
align query and candidate embeddings, a clamped binary cross-entropy on
scorer confidences, and a pairwise preference loss on score differences.
`joint_loss` combines the last two families with fixed weights.
"""

import logging
from dataclasses import asdict, dataclass, fields
from typing import Any, Dict, List, Sequence, Tuple

import numpy as np
from scipy.special import expit, log_expit, logsumexp, softmax

from ..core.models import EmbeddingVector
from ..errors import DimMismatch, EmptyInput, InvalidConfig, NonPositiveTemperature, ZeroVector

logger = logging.getLogger(__name__)

BCE_EPSILON = 1e-7
DEFAULT_TEMPERATURE = 0.05


@dataclass(frozen=True)
class InfoNceBatch:
    """Position-paired queries and candidates; every other pair is a negative."""

    queries: Tuple[EmbeddingVector, ...]
    candidates: Tuple[EmbeddingVector, ...]
    temperature: float = DEFAULT_TEMPERATURE

    def __post_init__(self) -> None:
        object.__setattr__(self, "queries", tuple(self.queries))
        object.__setattr__(self, "candidates", tuple(self.candidates))
        if not self.queries:
            raise EmptyInput("InfoNCE batch is empty")
        if len(self.queries) != len(self.candidates):
            raise DimMismatch(
                f"{len(self.queries)} queries but {len(self.candidates)} candidates"
            )
        if not self.temperature > 0:
            raise NonPositiveTemperature(f"Temperature must be > 0, got {self.temperature}")

    def matrices(self) -> Tuple[np.ndarray, np.ndarray]:
        dims = {v.dim for v in self.queries + self.candidates}
        if len(dims) != 1:
            raise DimMismatch(f"Batch mixes dims {sorted(dims)}")
        return (
            np.vstack([q.values for q in self.queries]),
            np.vstack([c.values for c in self.candidates]),
        )


@dataclass(frozen=True)
class LossReport:
    """Loss value plus gradients with respect to the raw query/candidate rows."""

    loss: float
    query_grads: np.ndarray
    candidate_grads: np.ndarray


def _unit(matrix: np.ndarray, what: str) -> Tuple[np.ndarray, np.ndarray]:
    norms = np.linalg.norm(matrix, axis=1, keepdims=True)
    if np.any(norms == 0.0):
        raise ZeroVector(f"Zero {what} vector in InfoNCE batch")
    return matrix / norms, norms


def _through_normalization(
    grad_unit: np.ndarray, unit: np.ndarray, norms: np.ndarray
) -> np.ndarray:
    # d(x/|x|)^T g = (g - x̂ (x̂·g)) / |x|
    radial = np.sum(unit * grad_unit, axis=1, keepdims=True)
    return (grad_unit - unit * radial) / norms


def infonce_loss_and_grad(
    queries: np.ndarray, candidates: np.ndarray, temperature: float
) -> LossReport:
    """Mean InfoNCE over rows of two N x d matrices, with gradients."""
    if not temperature > 0:
        raise NonPositiveTemperature(f"Temperature must be > 0, got {temperature}")
    if queries.shape != candidates.shape:
        raise DimMismatch(f"Query block {queries.shape} vs candidate block {candidates.shape}")

    q_unit, q_norms = _unit(queries, "query")
    c_unit, c_norms = _unit(candidates, "candidate")
    n = queries.shape[0]

    logits = (q_unit @ c_unit.T) / temperature
    loss = float(np.mean(logsumexp(logits, axis=1) - np.diag(logits)))

    grad_sim = (softmax(logits, axis=1) - np.eye(n)) / (n * temperature)
    grad_q = _through_normalization(grad_sim @ c_unit, q_unit, q_norms)
    grad_c = _through_normalization(grad_sim.T @ q_unit, c_unit, c_norms)
    return LossReport(loss, grad_q, grad_c)


def infonce_loss(batch: InfoNceBatch) -> float:
    queries, candidates = batch.matrices()
    return infonce_loss_and_grad(queries, candidates, batch.temperature).loss


def infonce_grad(batch: InfoNceBatch) -> LossReport:
    queries, candidates = batch.matrices()
    return infonce_loss_and_grad(queries, candidates, batch.temperature)


def bce_loss(score: float, label: int) -> float:
    """Binary cross-entropy of a confidence, clamped to [eps, 1 - eps]."""
    s = float(np.clip(score, BCE_EPSILON, 1.0 - BCE_EPSILON))
    return float(-(label * np.log(s) + (1 - label) * np.log1p(-s)))


def bce_grad(score: float, label: int) -> float:
    """d bce_loss / d score; zero where the clamp is active."""
    if score < BCE_EPSILON or score > 1.0 - BCE_EPSILON:
        return 0.0
    return -label / score + (1 - label) / (1.0 - score)


def preference_loss(score_gt: float, score_neg: float) -> float:
    """-log sigmoid(score_gt - score_neg)."""
    return float(-log_expit(score_gt - score_neg))


def preference_grad(score_gt: float, score_neg: float) -> Tuple[float, float]:
    """Gradients of preference_loss with respect to (score_gt, score_neg)."""
    d = score_gt - score_neg
    g = float(expit(d)) - 1.0
    return g, -g


@dataclass(frozen=True)
class RerankTriplet:
    """Scores of one query against its target, a random and a hard negative."""

    score_gt: float
    score_rand_neg: float
    score_hard_neg: float

    def __post_init__(self) -> None:
        values = (self.score_gt, self.score_rand_neg, self.score_hard_neg)
        if not all(np.isfinite(v) for v in values):
            raise ValueError(f"RerankTriplet scores must be finite: {values}")


@dataclass(frozen=True)
class JointLossWeights:
    rand_bce: float = 0.5
    hard_bce: float = 0.2
    preference: float = 0.3

    def __post_init__(self) -> None:
        weights = (self.rand_bce, self.hard_bce, self.preference)
        if any(w < 0 for w in weights) or not any(w > 0 for w in weights):
            raise InvalidConfig(
                f"Joint loss weights must be >= 0 with one positive, got {weights}"
            )

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "JointLossWeights":
        unknown = set(data) - {f.name for f in fields(cls)}
        if unknown:
            raise InvalidConfig(f"Unknown JointLossWeights keys: {sorted(unknown)}")
        return cls(**data)

    def to_dict(self) -> Dict[str, float]:
        return asdict(self)


def joint_loss(weights: JointLossWeights, bce_rand: float, bce_hard: float, pb: float) -> float:
    return weights.rand_bce * bce_rand + weights.hard_bce * bce_hard + weights.preference * pb


def pair_bce(score_gt: float, negative_scores: Sequence[float]) -> float:
    """BCE on the positive and its negatives, averaged over the pair."""
    negatives = [bce_loss(s, 0) for s in negative_scores]
    return 0.5 * (bce_loss(score_gt, 1) + float(np.mean(negatives)))


def triplet_losses(triplet: RerankTriplet) -> List[float]:
    """[bce_rand, bce_hard, preference] for one triplet."""
    return [
        pair_bce(triplet.score_gt, [triplet.score_rand_neg]),
        pair_bce(triplet.score_gt, [triplet.score_hard_neg]),
        preference_loss(triplet.score_gt, triplet.score_hard_neg),
    ]
