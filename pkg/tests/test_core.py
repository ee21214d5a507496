"""Tests for core domain types and similarity math."""

import math

import numpy as np
import pytest

from vrt_engine.core import (
    ComposedOrder,
    CorpusItem,
    EmbeddingVector,
    MomentWindow,
    QueryKind,
    QuerySpec,
    RankedList,
    cosine_similarity,
    interval_iou,
    l2_normalize,
)
from vrt_engine.errors import (
    DimensionMismatch,
    DuplicateId,
    EmptyInput,
    InvalidVector,
    ZeroVector,
)


class TestEmbeddingVector:
    """Test vector construction and validation."""

    def test_values_are_immutable_copies(self):
        """Test the vector owns a read-only 64-bit copy."""
        source = np.array([1.0, 2.0], dtype=np.float32)
        vector = EmbeddingVector(source)
        source[0] = 99.0

        assert vector.values.dtype == np.float64
        assert vector.values[0] == 1.0
        with pytest.raises(ValueError):
            vector.values[0] = 5.0

    def test_rejects_non_finite(self):
        """Test NaN and inf are refused."""
        with pytest.raises(InvalidVector):
            EmbeddingVector([1.0, math.nan])
        with pytest.raises(InvalidVector):
            EmbeddingVector([math.inf, 0.0])

    def test_normalized_flag_is_checked(self):
        """Test a vector flagged unit-norm must actually be unit-norm."""
        EmbeddingVector([0.6, 0.8], normalized=True)
        with pytest.raises(ValueError):
            EmbeddingVector([1.0, 1.0], normalized=True)

    def test_empty_vector_rejected(self):
        with pytest.raises(DimensionMismatch):
            EmbeddingVector([])

    def test_equality(self):
        assert EmbeddingVector([1.0, 2.0]) == EmbeddingVector([1.0, 2.0])
        assert EmbeddingVector([1.0, 2.0]) != EmbeddingVector([1.0, 2.5])


class TestCosineSimilarity:
    """Test cosine similarity and normalization."""

    def test_scale_invariant(self):
        """Test scaling either vector leaves the cosine unchanged."""
        a = EmbeddingVector([1.0, 2.0, 3.0])
        b = EmbeddingVector([-1.0, 0.5, 2.0])
        scaled = EmbeddingVector(a.values * 7.5)

        assert cosine_similarity(a, b) == pytest.approx(cosine_similarity(scaled, b), abs=1e-12)

    def test_orthogonal_and_parallel(self):
        assert cosine_similarity(EmbeddingVector([1.0, 0.0]), EmbeddingVector([0.0, 3.0])) == 0.0
        assert cosine_similarity(EmbeddingVector([2.0, 0.0]), EmbeddingVector([5.0, 0.0])) == 1.0

    def test_result_is_clipped(self):
        """Test rounding never pushes the result outside [-1, 1]."""
        rng = np.random.default_rng(0)
        for _ in range(100):
            v = EmbeddingVector(rng.standard_normal(8))
            assert -1.0 <= cosine_similarity(v, v) <= 1.0

    def test_errors(self):
        with pytest.raises(DimensionMismatch):
            cosine_similarity(EmbeddingVector([1.0]), EmbeddingVector([1.0, 0.0]))
        with pytest.raises(ZeroVector):
            cosine_similarity(EmbeddingVector([0.0, 0.0]), EmbeddingVector([1.0, 0.0]))

    def test_l2_normalize(self):
        unit = l2_normalize(EmbeddingVector([3.0, 4.0]))
        assert unit.normalized
        np.testing.assert_allclose(unit.values, [0.6, 0.8])
        with pytest.raises(ZeroVector):
            l2_normalize(EmbeddingVector([0.0, 0.0]))

    @pytest.mark.parametrize("seed", range(20))
    def test_l2_normalize_is_idempotent(self, seed):
        once = l2_normalize(EmbeddingVector(np.random.default_rng(seed).standard_normal(16) * 10))
        twice = l2_normalize(once)

        np.testing.assert_allclose(twice.values, once.values, atol=1e-12)
        assert twice.norm() == pytest.approx(1.0)


class TestQuerySpec:
    """Test query validation and keys."""

    def test_required_fields(self):
        with pytest.raises(EmptyInput):
            QuerySpec(kind=QueryKind.TEXT)
        with pytest.raises(EmptyInput):
            QuerySpec(kind=QueryKind.VIDEO, frame_refs=())
        with pytest.raises(EmptyInput):
            QuerySpec(kind=QueryKind.FRAME, frame_refs=("a", "b"))
        with pytest.raises(EmptyInput):
            QuerySpec(kind=QueryKind.COMPOSED, frame_refs=("a",), modification="")

    def test_composed_key_depends_on_order(self):
        video_first = QuerySpec(QueryKind.COMPOSED, frame_refs=("f1",), modification="snow")
        text_first = QuerySpec(
            QueryKind.COMPOSED, frame_refs=("f1",), modification="snow", order=ComposedOrder.TEXT_FIRST
        )
        assert video_first.key != text_first.key

    def test_dict_round_trip(self):
        spec = QuerySpec(QueryKind.COMPOSED, frame_refs=("f1", "f2"), modification="at night")
        assert QuerySpec.from_dict(spec.to_dict()) == spec


class TestRankedList:
    """Test ranked list invariants."""

    def test_from_scores_sorts_with_id_tie_break(self):
        ranked = RankedList.from_scores("q", [("b", 0.5), ("c", 0.9), ("a", 0.5)])
        assert ranked.item_ids == ["c", "a", "b"]
        assert ranked.rank_of("a") == 2
        assert ranked.rank_of("missing") is None

    def test_rejects_unsorted_and_duplicates(self):
        with pytest.raises(ValueError):
            RankedList("q", (("a", 0.1), ("b", 0.9)))
        with pytest.raises(DuplicateId):
            RankedList("q", (("a", 0.9), ("a", 0.1)))

    def test_json_shape(self):
        ranked = RankedList.from_scores("q1", [("v1", 0.75)])
        assert ranked.to_dict() == {"query_id": "q1", "ranking": [{"id": "v1", "score": 0.75}]}
        assert RankedList.from_dict(ranked.to_dict()) == ranked


class TestMomentWindow:
    """Test windows and interval IoU."""

    def test_validation(self):
        with pytest.raises(ValueError):
            MomentWindow(5.0, 5.0)
        with pytest.raises(ValueError):
            MomentWindow(-1.0, 2.0)

    def test_interval_iou(self):
        assert interval_iou(MomentWindow(0, 10), MomentWindow(5, 15)) == pytest.approx(1 / 3)
        assert interval_iou(MomentWindow(0, 10), MomentWindow(0, 10)) == 1.0
        assert interval_iou(MomentWindow(0, 10), MomentWindow(10, 20)) == 0.0

    @pytest.mark.parametrize("seed", range(20))
    def test_interval_iou_is_symmetric_and_bounded(self, seed):
        rng = np.random.default_rng(seed)
        a, b = (MomentWindow(s, s + rng.uniform(0.5, 20)) for s in rng.uniform(0, 30, 2))

        assert interval_iou(a, b) == interval_iou(b, a)
        assert 0.0 <= interval_iou(a, b) <= 1.0

    def test_corpus_item_requires_id(self):
        with pytest.raises(ValueError):
            CorpusItem("", "video", EmbeddingVector([1.0]))
