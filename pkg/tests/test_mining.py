"""Tests for hard and random negative sampling."""

from collections import Counter

import numpy as np
import pytest
from scipy.stats import chisquare

from vrt_engine.core import RankedList
from vrt_engine.errors import CorpusTooSmall, InvalidConfig, NoValidNegative
from vrt_engine.training.mining import MinerConfig, mine_hard_negative, sample_random_negative


def ranked_ids(ids, query_id="q"):
    n = len(ids)
    return RankedList(query_id, tuple((item_id, float(n - i)) for i, item_id in enumerate(ids)))


@pytest.fixture
def ranked():
    return ranked_ids([f"v{i:02d}" for i in range(1, 51)])


class TestMinerConfig:
    """Test miner configuration validation."""

    def test_defaults(self):
        cfg = MinerConfig()
        assert (cfg.k_top, cfg.low_rank, cfg.high_rank) == (50, 5, 50)

    def test_invalid_ranges(self):
        with pytest.raises(InvalidConfig):
            MinerConfig(low_rank=0)
        with pytest.raises(InvalidConfig):
            MinerConfig(low_rank=10, high_rank=5)
        with pytest.raises(InvalidConfig):
            MinerConfig(k_top=20, high_rank=50)
        with pytest.raises(InvalidConfig):
            MinerConfig(n_rand=0)
        with pytest.raises(InvalidConfig):
            MinerConfig.from_dict({"depth": 3})


class TestHardNegatives:
    """Test rank-window hard negative mining."""

    def test_uniform_over_window(self, ranked):
        """Test draws are uniform over ranks 5..50 when gt is outside the window."""
        rng = np.random.default_rng(0)
        cfg = MinerConfig()
        draws = Counter(mine_hard_negative(ranked, "v01", cfg, rng) for _ in range(10000))

        window = ranked.item_ids[4:50]
        assert set(draws) == set(window)
        _, p_value = chisquare([draws[i] for i in window])
        assert p_value > 0.01

    def test_never_returns_gt(self, ranked):
        rng = np.random.default_rng(1)
        draws = {mine_hard_negative(ranked, "v10", MinerConfig(), rng) for _ in range(2000)}

        assert "v10" not in draws
        assert len(draws) == 45

    def test_gt_at_rank_one_raises_low_bound(self):
        """Test rank 1 is skipped when the ground truth sits there."""
        ranked = ranked_ids(["gt", "a", "b", "c"])
        cfg = MinerConfig(k_top=4, low_rank=1, high_rank=2)
        rng = np.random.default_rng(2)

        assert {mine_hard_negative(ranked, "gt", cfg, rng) for _ in range(50)} == {"a"}

    def test_short_list_shrinks_window(self, caplog):
        ranked = ranked_ids(["a", "b", "c", "d", "e", "f"])
        rng = np.random.default_rng(3)

        draws = {mine_hard_negative(ranked, "a", MinerConfig(), rng) for _ in range(200)}

        assert draws == {"e", "f"}
        assert "shrinking high_rank" in caplog.text

    def test_list_shorter_than_low_rank(self):
        """Test a list shorter than low_rank still yields its valid negatives."""
        rng = np.random.default_rng(4)

        assert mine_hard_negative(ranked_ids(["a", "b", "c"]), "a", MinerConfig(), rng) == "c"
        draws = {mine_hard_negative(ranked_ids(["b", "a"]), "a", MinerConfig(), rng) for _ in range(50)}
        assert draws == {"b"}

    def test_short_list_with_gt_in_the_shifted_window(self, caplog):
        ranked = ranked_ids(["a", "b", "c", "d", "gt"])
        rng = np.random.default_rng(5)

        draws = {mine_hard_negative(ranked, "gt", MinerConfig(), rng) for _ in range(200)}

        assert draws == {"a", "b", "c", "d"}
        assert "holds only gt" in caplog.text

    def test_no_valid_negative(self):
        with pytest.raises(NoValidNegative):
            mine_hard_negative(ranked_ids(["gt"]), "gt", MinerConfig(), np.random.default_rng(0))
        with pytest.raises(NoValidNegative):
            mine_hard_negative(ranked_ids([]), "gt", MinerConfig(), np.random.default_rng(0))

    def test_deterministic_for_seed(self, ranked):
        first = [mine_hard_negative(ranked, "v01", MinerConfig(), np.random.default_rng(9)) for _ in range(5)]
        second = [mine_hard_negative(ranked, "v01", MinerConfig(), np.random.default_rng(9)) for _ in range(5)]
        assert first == second


class TestRandomNegatives:
    """Test uniform random negatives."""

    def test_uniform_and_excludes_gt(self):
        ids = [f"c{i}" for i in range(10)]
        rng = np.random.default_rng(4)
        draws = Counter(sample_random_negative(ids, "c3", rng) for _ in range(10000))

        assert "c3" not in draws
        _, p_value = chisquare([draws[i] for i in ids if i != "c3"])
        assert p_value > 0.01

    def test_corpus_too_small(self):
        with pytest.raises(CorpusTooSmall):
            sample_random_negative(["only"], "only", np.random.default_rng(0))
        with pytest.raises(CorpusTooSmall):
            sample_random_negative([], "x", np.random.default_rng(0))
