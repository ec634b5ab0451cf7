import io
import json

import pytest

from wifiplaces.cluster import distance
from wifiplaces.dataset import GroundTruth
from wifiplaces.evaluate import (
    EvalReport,
    Prediction,
    evaluate_predictions,
    export_matches,
    mean_distance_error,
    score,
)


def _pred(i, lon, lat, floor=0, bld=0, entry=0):
    return Prediction(
        query_index=i,
        predicted=GroundTruth(float(lon), float(lat), floor, bld),
        entry_index=entry,
    )


def _truth(lon, lat, floor=0, bld=0):
    return GroundTruth(float(lon), float(lat), floor, bld)


def test_score_all_correct():
    preds = [_pred(0, 0, 0), _pred(1, 5, 5)]
    truths = [_truth(1, 1), _truth(4, 4)]
    assert score(preds, truths) == 1.0


def test_wrong_floor_counts_as_incorrect():
    preds = [_pred(0, 0, 0, floor=1)]
    truths = [_truth(0, 0, floor=2)]
    assert score(preds, truths) == 0.0


def test_score_eight_of_ten():
    preds = [_pred(i, 0, 0, floor=0 if i < 8 else 1) for i in range(10)]
    truths = [_truth(0, 0, floor=0) for _ in range(10)]
    assert score(preds, truths) == 0.8


def test_score_rejects_empty_or_misaligned():
    with pytest.raises(ValueError):
        score([], [])
    with pytest.raises(ValueError):
        score([_pred(0, 0, 0)], [])


def test_e_d_single_query_three_metres():
    preds = [_pred(0, 3, 0)]
    truths = [_truth(0, 0)]
    assert mean_distance_error(preds, truths) == 3.0


def test_e_d_zero_for_exact_match():
    preds = [_pred(0, 2, 2)]
    truths = [_truth(2, 2)]
    assert mean_distance_error(preds, truths) == 0.0


def test_e_d_three_query_fixture():
    # 4 m and 6 m correct, one incorrect excluded: exactly 5.0
    preds = [
        _pred(0, 4, 0),
        _pred(1, 0, 6),
        _pred(2, 100, 100, floor=1),
    ]
    truths = [_truth(0, 0), _truth(0, 0), _truth(100, 100, floor=0)]
    assert mean_distance_error(preds, truths) == 5.0


def test_e_d_undefined_when_no_correct():
    preds = [_pred(0, 0, 0, floor=1)]
    truths = [_truth(0, 0, floor=0)]
    assert mean_distance_error(preds, truths) is None
    report = evaluate_predictions(preds, truths)
    assert report.e_d_m is None
    assert json.loads(report.to_json())["e_d_m"] is None


def test_e_d_ignores_added_incorrect_predictions():
    preds = [_pred(0, 4, 0)]
    truths = [_truth(0, 0)]
    base = mean_distance_error(preds, truths)
    preds2 = preds + [_pred(1, 50, 50, floor=3)]
    truths2 = truths + [_truth(50, 50, floor=0)]
    assert mean_distance_error(preds2, truths2) == base


def test_e_d_uses_cluster_metric():
    p = _pred(0, 3, 4)
    t = _truth(0, 0)
    assert mean_distance_error([p], [t]) == distance(t, p.predicted) == 5.0


def test_score_permutation_invariant():
    preds = [_pred(i, 0, 0, floor=i % 2) for i in range(6)]
    truths = [_truth(0, 0, floor=0) for _ in range(6)]
    base = score(preds, truths)
    perm = [5, 3, 1, 0, 2, 4]
    assert score([preds[i] for i in perm], [truths[i] for i in perm]) == base


def test_report_fields():
    preds = [_pred(0, 3, 0), _pred(1, 0, 0, floor=1)]
    truths = [_truth(0, 0), _truth(0, 0, floor=0)]
    report = evaluate_predictions(preds, truths)
    assert report == EvalReport(score=0.5, e_d_m=3.0, n_total=2, n_correct=1)
    doc = json.loads(report.to_json())
    assert set(doc) == {"score", "e_d_m", "n_total", "n_correct"}


def test_export_matches_schema():
    preds = [
        _pred(0, 1, 0, entry=4),
        _pred(1, 0, 0, floor=2, entry=9),
    ]
    truths = [_truth(0, 0), _truth(0, 0, floor=0)]
    buf = io.StringIO()
    export_matches(buf, preds, truths, posteriors=[0.9, 0.4])
    lines = buf.getvalue().splitlines()
    assert len(lines) == 3  # header + one row per query
    header = lines[0].split(",")
    assert header[:5] == [
        "query_index",
        "true_lon",
        "true_lat",
        "true_floor",
        "true_building",
    ]
    row0 = lines[1].split(",")
    assert row0[0] == "0" and row0[10] == "1"  # correct flag set
    row1 = lines[2].split(",")
    assert row1[10] == "0"
    # floor-mismatch rows identifiable from the two floor columns
    assert row1[3] != lines[2].split(",")[8]
    assert float(row0[11]) == 0.9
