"""Tests for retrieval and moment metrics, reports and ground-truth files."""

import json

import numpy as np
import pytest

from vrt_engine.core import MomentWindow, RankedList
from vrt_engine.errors import (
    DimMismatch,
    DuplicateId,
    EmptyInput,
    InvalidConfig,
    MissingGroundTruth,
    StoreIOError,
)
from vrt_engine.evaluation import (
    MetricRecord,
    MomentGroundTruth,
    RetrievalGroundTruth,
    emit_report,
    load_moment_gt,
    load_moment_predictions,
    load_rankings,
    load_retrieval_gt,
    mean_iou,
    mean_rank,
    median_rank,
    moment_metrics,
    moment_recall,
    parse_report,
    rankings_from_matrix,
    read_jsonl,
    recall_at_k,
    retrieval_metrics,
    save_moment_gt,
    save_moment_predictions,
    save_rankings,
    save_retrieval_gt,
)


def ranked(query_id, ids):
    return RankedList.from_scores(query_id, [(item_id, 1.0 - 0.1 * i) for i, item_id in enumerate(ids)])


@pytest.fixture
def rankings():
    return [
        ranked("q1", ["v1", "v2", "v3"]),
        ranked("q2", ["v1", "v2", "v3"]),
        ranked("q3", ["v2", "v1"]),
    ]


@pytest.fixture
def gt():
    return RetrievalGroundTruth.from_mapping({"q1": ["v1"], "q2": ["v3"], "q3": ["v9"]})


class TestRetrievalMetrics:
    """Test recall and rank statistics."""

    def test_recall_at_k(self, rankings, gt):
        assert recall_at_k(rankings, gt, 1) == pytest.approx(1 / 3)
        assert recall_at_k(rankings, gt, 3) == pytest.approx(2 / 3)
        assert recall_at_k(rankings, gt, 10) == pytest.approx(2 / 3)

    def test_recall_edge_cases(self, rankings, gt):
        assert recall_at_k([], gt, 1) == 0.0
        with pytest.raises(ValueError):
            recall_at_k(rankings, gt, 0)

    def test_ranks_count_a_miss_as_one_past_the_end(self, rankings, gt):
        """Test an unlisted ground truth item ranks at len + 1."""
        assert median_rank(rankings, gt) == 3.0
        assert mean_rank(rankings, gt) == pytest.approx(7 / 3)

    def test_rank_statistics_need_rankings(self, gt):
        with pytest.raises(EmptyInput):
            median_rank([], gt)
        with pytest.raises(EmptyInput):
            mean_rank([], gt)

    def test_any_correct_item_counts(self):
        gt = RetrievalGroundTruth.from_mapping({"q": ["v3", "v2"]})
        assert recall_at_k([ranked("q", ["v1", "v2", "v3"])], gt, 2) == 1.0

    def test_absent_rankings_are_misses(self, rankings, gt):
        """Test a ground-truth query without a ranking lowers recall."""
        assert recall_at_k(rankings[:1], gt, 1) == pytest.approx(1 / 3)
        assert recall_at_k(rankings[:1], RetrievalGroundTruth.from_mapping({"q1": ["v1"]}), 1) == 1.0

    def test_duplicate_rankings(self, rankings, gt):
        with pytest.raises(DuplicateId):
            recall_at_k(rankings + rankings[:1], gt, 1)

    def test_missing_ground_truth(self, rankings):
        with pytest.raises(MissingGroundTruth):
            recall_at_k(rankings, RetrievalGroundTruth.from_mapping({"q1": ["v1"]}), 1)

    def test_empty_ground_truth_set(self):
        with pytest.raises(EmptyInput):
            RetrievalGroundTruth.from_mapping({"q": []})

    def test_inverted(self, gt):
        inverse = gt.inverted()
        assert inverse.correct("v1") == frozenset({"q1"})
        assert len(inverse) == 3

    def test_metric_records(self, rankings, gt):
        records = retrieval_metrics(rankings, gt, "t2v")

        assert [(r.metric, r.k) for r in records] == [
            ("recall", 1),
            ("recall", 5),
            ("recall", 10),
            ("median_rank", None),
            ("mean_rank", None),
        ]
        assert all(r.task == "t2v" for r in records)


class TestRankingsFromMatrix:
    """Test ranked lists built from a similarity matrix."""

    def test_both_directions(self):
        sims = np.array([[0.9, 0.1, 0.5], [0.2, 0.8, 0.3]])

        forward = rankings_from_matrix(sims, ["q1", "q2"], ["v1", "v2", "v3"])
        backward = rankings_from_matrix(sims.T, ["v1", "v2", "v3"], ["q1", "q2"])

        assert forward[0].item_ids == ["v1", "v3", "v2"]
        assert forward[1].item_ids == ["v2", "v3", "v1"]
        assert [r.item_ids[0] for r in backward] == ["q1", "q2", "q1"]

    def test_top_k(self):
        lists = rankings_from_matrix(np.eye(4), list("abcd"), list("wxyz"), k=2)
        assert all(len(r) == 2 for r in lists)

    def test_shape_mismatch(self):
        with pytest.raises(DimMismatch):
            rankings_from_matrix(np.eye(2), ["a"], ["x", "y"])


class TestMomentMetrics:
    """Test IoU-thresholded recall and mean IoU."""

    @pytest.fixture
    def moment_gt(self):
        return MomentGroundTruth({"a": MomentWindow(5.0, 15.0), "b": MomentWindow(30.0, 40.0)})

    def test_recall_at_threshold(self, moment_gt):
        """Test [0, 10] against [5, 15] has IoU 1/3 and hits at 0.3 but not 0.5."""
        predictions = {"a": [MomentWindow(0.0, 10.0)], "b": [MomentWindow(30.0, 40.0)]}

        assert moment_recall(predictions, moment_gt, 0.3, 1) == 1.0
        assert moment_recall(predictions, moment_gt, 0.5, 1) == 0.5

    def test_recall_looks_at_top_k(self, moment_gt):
        predictions = {"a": [MomentWindow(50.0, 60.0), MomentWindow(5.0, 15.0)], "b": [MomentWindow(30.0, 40.0)]}

        assert moment_recall(predictions, moment_gt, 0.5, 1) == 0.5
        assert moment_recall(predictions, moment_gt, 0.5, 5) == 1.0

    def test_empty_predictions_count_as_misses(self, moment_gt):
        predictions = {"a": [MomentWindow(5.0, 15.0)], "b": []}

        assert moment_recall(predictions, moment_gt, 0.5, 1) == 0.5
        assert mean_iou(predictions, moment_gt) == pytest.approx(0.5)
        assert mean_iou({}, moment_gt) == 0.0

    def test_mean_iou_uses_top_window(self, moment_gt):
        predictions = {"a": [MomentWindow(0.0, 10.0), MomentWindow(5.0, 15.0)], "b": [MomentWindow(30.0, 40.0)]}
        assert mean_iou(predictions, moment_gt) == pytest.approx((1 / 3 + 1) / 2)

    def test_absent_queries_count_as_empty(self, moment_gt):
        """Test leaving a ground-truth query out scores it as a miss."""
        predictions = {"a": [MomentWindow(5.0, 15.0)]}

        assert moment_recall(predictions, moment_gt, 0.5, 1) == 0.5
        assert mean_iou(predictions, moment_gt) == pytest.approx(0.5)

    def test_missing_ground_truth(self, moment_gt):
        with pytest.raises(MissingGroundTruth):
            mean_iou({"zzz": [MomentWindow(0.0, 1.0)]}, moment_gt)

    def test_metric_records(self, moment_gt):
        records = moment_metrics({"a": [MomentWindow(5.0, 15.0)]}, moment_gt)

        assert len(records) == 7
        assert records[-1].metric == "miou"
        assert {(r.k, r.threshold) for r in records[:-1]} == {
            (k, t) for k in (1, 5) for t in (0.3, 0.5, 0.7)
        }


class TestReport:
    """Test JSON and CSV report emission."""

    @pytest.fixture
    def records(self):
        return [
            MetricRecord("t2v", "recall", 1, None, 0.4375),
            MetricRecord("moment", "recall", 1, 0.5, 0.91),
            MetricRecord("moment", "miou", None, None, 0.7234567890123),
        ]

    @pytest.mark.parametrize("fmt", ["json", "csv"])
    def test_parse_inverts_emit(self, records, fmt):
        assert parse_report(emit_report(records, fmt), fmt) == records

    @pytest.mark.parametrize("fmt", ["json", "csv"])
    def test_emit_is_deterministic(self, records, fmt):
        assert emit_report(records, fmt) == emit_report(list(records), fmt)

    def test_csv_layout(self, records):
        lines = emit_report(records, "csv").decode("utf-8").splitlines()

        assert lines[0] == "task,metric,k,threshold,value"
        assert lines[1] == "t2v,recall,1,,0.4375"

    def test_json_layout(self, records):
        rows = json.loads(emit_report(records, "json"))
        assert rows[1] == {"task": "moment", "metric": "recall", "k": 1, "threshold": 0.5, "value": 0.91}

    def test_unknown_format(self, records):
        with pytest.raises(InvalidConfig):
            emit_report(records, "xml")
        with pytest.raises(InvalidConfig):
            parse_report(b"", "xml")

    def test_non_finite_value(self):
        with pytest.raises(ValueError):
            MetricRecord("t2v", "recall", 1, None, float("nan"))


class TestGroundTruthFiles:
    """Test JSONL persistence of ground truth, rankings and predictions."""

    def test_retrieval_gt(self, tmp_path, gt):
        path = tmp_path / "gt.jsonl"
        save_retrieval_gt(path, gt)
        assert load_retrieval_gt(path) == gt

    def test_retrieval_gt_merges_repeated_queries(self, tmp_path):
        path = tmp_path / "gt.jsonl"
        path.write_text(
            '{"query_id": "q", "item_ids": ["a"]}\n\n{"query_id": "q", "item_ids": ["b"]}\n',
            encoding="utf-8",
        )
        assert load_retrieval_gt(path).correct("q") == frozenset({"a", "b"})

    def test_moment_gt(self, tmp_path):
        gt = MomentGroundTruth({"a": MomentWindow(1.5, 4.0)})
        path = tmp_path / "moments.jsonl"
        save_moment_gt(path, gt)
        assert load_moment_gt(path).window("a") == MomentWindow(1.5, 4.0)

    def test_rankings(self, tmp_path, rankings):
        path = tmp_path / "rankings.jsonl"
        save_rankings(path, rankings)
        assert load_rankings(path) == rankings

    def test_moment_predictions(self, tmp_path):
        predictions = {"a": [MomentWindow(0.0, 2.0, 0.9), MomentWindow(3.0, 5.0, 0.4)], "b": []}
        path = tmp_path / "predictions.jsonl"
        save_moment_predictions(path, predictions)
        assert load_moment_predictions(path) == predictions

    def test_bad_json_line(self, tmp_path):
        path = tmp_path / "broken.jsonl"
        path.write_text('{"ok": 1}\n{not json\n', encoding="utf-8")

        with pytest.raises(ValueError, match="broken.jsonl:2"):
            list(read_jsonl(path))

    def test_missing_file(self, tmp_path):
        with pytest.raises(StoreIOError):
            list(read_jsonl(tmp_path / "absent.jsonl"))
