"""Negative sampling for re-ranker training."""

import logging
from dataclasses import asdict, dataclass, fields
from typing import Any, Dict, Sequence

import numpy as np

from ..core.models import RankedList
from ..errors import CorpusTooSmall, InvalidConfig, NoValidNegative

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class MinerConfig:
    """Retrieval depth, hard-negative rank range (1-based, inclusive) and counts."""

    k_top: int = 50
    low_rank: int = 5
    high_rank: int = 50
    n_rand: int = 1
    n_hard_bce: int = 1
    n_hard_pb: int = 1
    seed: int = 0

    def __post_init__(self) -> None:
        if not 1 <= self.low_rank <= self.high_rank <= self.k_top:
            raise InvalidConfig(
                "Miner ranks must satisfy 1 <= low_rank <= high_rank <= k_top, got "
                f"{self.low_rank}, {self.high_rank}, {self.k_top}"
            )
        if min(self.n_rand, self.n_hard_bce, self.n_hard_pb) < 1:
            raise InvalidConfig("Negative counts must be >= 1")

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "MinerConfig":
        unknown = set(data) - {f.name for f in fields(cls)}
        if unknown:
            raise InvalidConfig(f"Unknown MinerConfig keys: {sorted(unknown)}")
        return cls(**data)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def mine_hard_negative(
    ranked: RankedList, gt_id: str, cfg: MinerConfig, rng: np.random.Generator
) -> str:
    """Draw a uniformly random id from rank positions [low_rank, high_rank]."""
    ids = ranked.item_ids
    high = cfg.high_rank
    if high > len(ids):
        logger.warning(
            f"Ranked list for {ranked.query_id} has {len(ids)} entries; "
            f"shrinking high_rank {high} -> {len(ids)}"
        )
        high = len(ids)
    floor = 2 if ids and ids[0] == gt_id else 1
    low = max(min(cfg.low_rank, high), floor)

    window = ids[low - 1 : high]
    if high < cfg.high_rank and not any(item_id != gt_id for item_id in window):
        logger.warning(
            f"Shifted window of {ranked.query_id} holds only {gt_id}; drawing from rank {floor}"
        )
        low = floor
        window = ids[low - 1 : high]
    if not any(item_id != gt_id for item_id in window):
        raise NoValidNegative(
            f"No negative other than {gt_id} in ranks [{low}, {high}] of {ranked.query_id}"
        )

    while True:
        rank = int(rng.integers(low, high + 1))
        item_id = ids[rank - 1]
        if item_id != gt_id:
            return item_id


def sample_random_negative(
    corpus_ids: Sequence[str], gt_id: str, rng: np.random.Generator
) -> str:
    """Uniform draw over corpus ids other than gt_id."""
    others = [item_id for item_id in corpus_ids if item_id != gt_id]
    if len(corpus_ids) < 2 or not others:
        raise CorpusTooSmall(f"Need at least one id besides {gt_id}, corpus has {len(corpus_ids)}")
    return others[int(rng.integers(len(others)))]
