"""Tests for exact dense search."""

import numpy as np
import pytest

from vrt_engine.core import CorpusItem, EmbeddingVector, ItemKind
from vrt_engine.errors import DimMismatch, DuplicateId, EmptyCorpus, ZeroVector
from vrt_engine.storage.dense_index import (
    build_index,
    load_index,
    save_index,
    search,
    similarity_matrix,
)


def corpus(rows, prefix="v"):
    return [
        CorpusItem(f"{prefix}{i}", ItemKind.VIDEO, EmbeddingVector(row))
        for i, row in enumerate(rows)
    ]


@pytest.fixture
def random_index():
    rng = np.random.default_rng(7)
    return build_index(corpus(rng.standard_normal((40, 8))))


class TestBuildIndex:
    """Test index construction."""

    def test_rows_are_unit(self, random_index):
        norms = np.linalg.norm(random_index.matrix64, axis=1)
        np.testing.assert_allclose(norms, 1.0, atol=1e-6)

    def test_errors(self):
        with pytest.raises(EmptyCorpus):
            build_index([])
        with pytest.raises(ZeroVector):
            build_index(corpus([[0.0, 0.0]]))
        with pytest.raises(DimMismatch):
            build_index(corpus([[1.0, 0.0]]) + corpus([[1.0, 0.0, 0.0]], prefix="w"))
        with pytest.raises(DuplicateId):
            build_index(corpus([[1.0, 0.0]]) + corpus([[0.0, 1.0]]))


class TestSearch:
    """Test top-k search semantics."""

    def test_matches_brute_force(self, random_index):
        """Test the ranking equals a full sort of cosine scores."""
        query = EmbeddingVector(np.random.default_rng(3).standard_normal(8))
        result = search(random_index, query, k=10)

        unit = query.values / query.norm()
        scores = random_index.matrix64 @ unit
        expected = sorted(zip(random_index.ids, scores), key=lambda e: (-e[1], e[0]))[:10]
        assert result.item_ids == [i for i, _ in expected]
        np.testing.assert_allclose(result.scores, [s for _, s in expected])

    @pytest.mark.parametrize("seed", range(50))
    def test_random_corpora_match_full_sort(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(1, 1001))
        k = int(rng.integers(1, 60))
        index = build_index(corpus(rng.standard_normal((n, 64))))
        query = EmbeddingVector(rng.standard_normal(64))

        scores = index.matrix64 @ (query.values / query.norm())
        expected = sorted(zip(index.ids, scores), key=lambda e: (-e[1], e[0]))[:k]

        assert search(index, query, k).item_ids == [i for i, _ in expected]

    @pytest.mark.parametrize("seed", range(20))
    def test_smaller_k_is_a_prefix(self, random_index, seed):
        rng = np.random.default_rng(seed)
        query = EmbeddingVector(rng.standard_normal(8))
        k1, k2 = sorted(int(k) for k in rng.integers(1, 41, 2))

        short, long = search(random_index, query, k1), search(random_index, query, k2)

        assert short.entries == long.entries[:k1]

    def test_full_depth_is_a_permutation(self, random_index):
        query = EmbeddingVector(np.random.default_rng(5).standard_normal(8))
        result = search(random_index, query, len(random_index))

        assert sorted(result.item_ids) == sorted(random_index.ids)

    def test_k_larger_than_corpus(self, random_index):
        query = EmbeddingVector(np.ones(8))
        assert len(search(random_index, query, k=1000)) == len(random_index)

    def test_ties_break_by_id(self):
        """Test identical rows are ordered by ascending id."""
        index = build_index(
            [
                CorpusItem("c", ItemKind.VIDEO, EmbeddingVector([1.0, 0.0])),
                CorpusItem("a", ItemKind.VIDEO, EmbeddingVector([2.0, 0.0])),
                CorpusItem("b", ItemKind.VIDEO, EmbeddingVector([3.0, 0.0])),
                CorpusItem("z", ItemKind.VIDEO, EmbeddingVector([0.0, 1.0])),
            ]
        )
        result = search(index, EmbeddingVector([1.0, 0.0]), k=2)

        assert result.item_ids == ["a", "b"]

    def test_query_errors(self, random_index):
        with pytest.raises(DimMismatch):
            search(random_index, EmbeddingVector([1.0, 0.0]), k=1)
        with pytest.raises(ZeroVector):
            search(random_index, EmbeddingVector(np.zeros(8)), k=1)
        with pytest.raises(ValueError):
            search(random_index, EmbeddingVector(np.ones(8)), k=0)

    def test_similarity_matrix_is_parallel_safe(self, random_index):
        """Test the threaded matrix equals the sequential one exactly."""
        rng = np.random.default_rng(11)
        queries = [EmbeddingVector(v) for v in rng.standard_normal((9, 8))]

        sequential = similarity_matrix(queries, random_index, jobs=1)
        threaded = similarity_matrix(queries, random_index, jobs=4)

        assert sequential.shape == (9, 40)
        np.testing.assert_array_equal(sequential, threaded)

    def test_save_and_load(self, random_index, tmp_path):
        path = tmp_path / "index.bin"
        save_index(path, random_index)
        loaded = load_index(path)

        query = EmbeddingVector(np.arange(8, dtype=float) + 1)
        assert search(loaded, query, k=5).item_ids == search(random_index, query, k=5).item_ids
