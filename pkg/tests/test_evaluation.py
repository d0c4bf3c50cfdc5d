"""Top-k matching metrics and ground-truth loading."""

import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from newsevents.errors import DataError
from newsevents.evaluation import (
    GroundTruth,
    k_metrics,
    kmatch,
    load_ground_truth,
    write_metrics_tsv,
)
from newsevents.selection import KeyEvent


def _truth(*event_sets):
    return GroundTruth(events=[set(e) for e in event_sets])


# ---------------------------------------------------------------------------
# kmatch
# ---------------------------------------------------------------------------

def test_strict_majority_at_five():
    truth = {"a", "b", "c", "d", "e"}
    assert kmatch(["a", "b", "c", "x", "y"], truth, k=5)  # 6 > 5
    assert not kmatch(["a", "b", "x", "y", "z"], truth, k=5)  # 4 < 5


def test_exactly_half_is_not_a_match():
    truth = {f"t{i}" for i in range(10)}
    pred = [f"t{i}" for i in range(5)] + [f"x{i}" for i in range(5)]
    assert not kmatch(pred, truth, k=10)  # 10 is not > 10
    pred = [f"t{i}" for i in range(6)] + [f"x{i}" for i in range(4)]
    assert kmatch(pred, truth, k=10)  # 12 > 10


def test_short_predictions_face_the_same_bar():
    truth = {"a", "b", "c"}
    # three docs, all in truth: 6 > 5 even though the list is short
    assert kmatch(["a", "b", "c"], truth, k=5)
    # two docs can never clear the k=5 bar
    assert not kmatch(["a", "b"], truth, k=5)


def test_prediction_shapes_are_equivalent():
    truth = {"a", "b", "c"}
    as_ids = ["a", "b", "c", "x", "y"]
    as_pairs = [(d, 1.0 - i / 10) for i, d in enumerate(as_ids)]
    as_event = KeyEvent(event_id=0, documents=as_pairs, phrases=set(),
                        span=(0, 1))
    assert kmatch(as_ids, truth, 5) == kmatch(as_pairs, truth, 5) \
        == kmatch(as_event, truth, 5) is True


def test_only_the_top_k_counts():
    truth = {"a", "b", "c", "d"}
    # the matches sit below the cut
    pred = ["x", "y", "z", "a", "b", "c", "d"]
    assert not kmatch(pred, truth, k=3)
    assert kmatch(pred[3:], truth, k=3)


def test_k_must_be_positive():
    with pytest.raises(DataError):
        kmatch(["a"], {"a"}, k=0)


# ---------------------------------------------------------------------------
# precision / recall / f1
# ---------------------------------------------------------------------------

def test_two_of_three_predictions_match_both_truths():
    truth = _truth(
        {f"a{i}" for i in range(5)},
        {f"b{i}" for i in range(5)},
    )
    preds = [
        ["a0", "a1", "a2", "x0", "x1"],
        ["b0", "b1", "b2", "b3", "x2"],
        ["x3", "x4", "x5", "x6", "x7"],
    ]
    prec, recall, f1 = k_metrics(preds, truth, k=5)
    assert prec == pytest.approx(2 / 3)
    assert recall == pytest.approx(1.0)
    assert f1 == pytest.approx(0.8)


def test_no_eligible_predictions_scores_zero():
    truth = _truth({"a", "b", "c"})
    prec, recall, f1 = k_metrics([["x", "y"]], truth, k=5)
    assert (prec, recall, f1) == (0.0, 0.0, 0.0)


def test_short_match_raises_recall_but_not_eligibility():
    truth = _truth({"a", "b", "c"})
    # 3-doc prediction matches (6 > 5) but is not eligible at k=5
    prec, recall, f1 = k_metrics([["a", "b", "c"]], truth, k=5)
    assert prec == 0.0
    assert recall == 1.0
    assert f1 == 0.0


def test_perfect_recovery_scores_one():
    truth = _truth({f"a{i}" for i in range(6)}, {f"b{i}" for i in range(6)})
    preds = [[f"a{i}" for i in range(6)], [f"b{i}" for i in range(6)]]
    assert k_metrics(preds, truth, k=5) == (1.0, 1.0, 1.0)


def test_duplicate_matches_count_one_truth_once():
    truth = _truth({f"a{i}" for i in range(5)})
    preds = [
        ["a0", "a1", "a2", "a3", "a4"],
        ["a0", "a1", "a2", "x0", "x1"],
    ]
    prec, recall, f1 = k_metrics(preds, truth, k=5)
    assert prec == pytest.approx(1 / 2)
    assert recall == pytest.approx(1.0)


def _metrics_oracle(preds, truth_sets, k):
    """Independent restatement: count truths matched by any prediction,
    divide by eligible predictions and by all truths."""
    def top(p):
        return p[:k]

    def matches(p, t):
        return 2 * len(set(top(p)) & t) > k

    matched = sum(1 for t in truth_sets if any(matches(p, t) for p in preds))
    eligible = [p for p in preds if len(top(p)) >= k]
    prec = matched / len(eligible) if eligible else 0.0
    rec = matched / len(truth_sets)
    f1 = 2 * prec * rec / (prec + rec) if prec + rec else 0.0
    return prec, rec, f1


@settings(max_examples=200, deadline=None)
@given(data=st.data())
def test_metrics_match_independent_oracle(data):
    universe = [f"d{i}" for i in range(12)]
    n_truth = data.draw(st.integers(1, 3))
    truth_sets = [
        set(data.draw(st.lists(st.sampled_from(universe), min_size=1,
                               max_size=6, unique=True)))
        for _ in range(n_truth)
    ]
    n_pred = data.draw(st.integers(0, 4))
    preds = [
        data.draw(st.lists(st.sampled_from(universe), min_size=0,
                           max_size=8, unique=True))
        for _ in range(n_pred)
    ]
    k = data.draw(st.integers(1, 6))
    got = k_metrics(preds, GroundTruth(events=truth_sets), k)
    assert got == pytest.approx(_metrics_oracle(preds, truth_sets, k))


# ---------------------------------------------------------------------------
# ground truth I/O
# ---------------------------------------------------------------------------

def test_truth_requires_nonempty_events():
    with pytest.raises(DataError):
        GroundTruth(events=[])
    with pytest.raises(DataError):
        GroundTruth(events=[{"a"}, set()])


def test_default_names_are_indices():
    gt = GroundTruth(events=[{"a"}, {"b"}])
    assert gt.names == ["0", "1"]


def test_load_round_trip(tmp_path):
    path = tmp_path / "truth.jsonl"
    rows = [
        {"event_id": "quake", "doc_ids": ["d1", "d2"]},
        {"event_id": "strike", "doc_ids": ["d9"]},
    ]
    path.write_text("\n".join(json.dumps(r) for r in rows) + "\n")
    gt = load_ground_truth(path)
    assert gt.events == [{"d1", "d2"}, {"d9"}]
    assert gt.names == ["quake", "strike"]


def test_load_rejects_bad_rows(tmp_path):
    path = tmp_path / "truth.jsonl"
    path.write_text("not json\n")
    with pytest.raises(DataError, match="invalid JSON"):
        load_ground_truth(path)
    path.write_text('{"event_id": "x"}\n')
    with pytest.raises(DataError, match="doc_ids"):
        load_ground_truth(path)
    path.write_text('{"doc_ids": []}\n')
    with pytest.raises(DataError, match="empty"):
        load_ground_truth(path)
    path.write_text("\n\n")
    with pytest.raises(DataError, match="no ground truth"):
        load_ground_truth(path)


def test_load_missing_file_is_a_data_error(tmp_path):
    with pytest.raises(DataError):
        load_ground_truth(tmp_path / "nope.jsonl")


def test_metrics_tsv_layout(tmp_path):
    truth = _truth({f"a{i}" for i in range(6)})
    preds = [[f"a{i}" for i in range(10)]]
    path = tmp_path / "metrics.tsv"
    write_metrics_tsv(path, preds, truth, ks=(5, 10))
    lines = path.read_text().splitlines()
    assert lines[0] == "k\tprecision\trecall\tf1"
    assert lines[1] == "5\t1.000000\t1.000000\t1.000000"
    # at k=10 only 6 of the top 10 lie in the truth set: 12 > 10 still
    assert lines[2] == "10\t1.000000\t1.000000\t1.000000"
