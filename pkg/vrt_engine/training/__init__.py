"""Training objectives, negative mining and the toy trainers."""

from .mining import MinerConfig, mine_hard_negative, sample_random_negative
from .objectives import (
    InfoNceBatch,
    JointLossWeights,
    LossReport,
    RerankTriplet,
    bce_grad,
    bce_loss,
    infonce_grad,
    infonce_loss,
    infonce_loss_and_grad,
    joint_loss,
    preference_grad,
    preference_loss,
    triplet_losses,
)
from .toy_trainer import (
    EpochRecord,
    LinearAdapter,
    ToyScorer,
    TrainConfig,
    embed_concepts,
    load_model,
    ordering_accuracy,
    save_model,
    split_concepts,
    train_embedder,
    train_reranker,
    write_history,
)

__all__ = [
    "EpochRecord",
    "InfoNceBatch",
    "JointLossWeights",
    "LinearAdapter",
    "LossReport",
    "MinerConfig",
    "RerankTriplet",
    "ToyScorer",
    "TrainConfig",
    "bce_grad",
    "bce_loss",
    "embed_concepts",
    "infonce_grad",
    "infonce_loss",
    "infonce_loss_and_grad",
    "joint_loss",
    "load_model",
    "mine_hard_negative",
    "ordering_accuracy",
    "preference_grad",
    "preference_loss",
    "sample_random_negative",
    "save_model",
    "split_concepts",
    "train_embedder",
    "train_reranker",
    "triplet_losses",
    "write_history",
]
