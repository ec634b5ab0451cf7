"""Scoring: building+floor accuracy and mean distance error over correct matches.

The distance error averages the planar metric (same one the clustering uses)
between each correctly classified query and its matched database location;
incorrect queries never contribute. An empty correct set yields an explicit
undefined value, never zero.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .cluster import distance
from .dataset import GroundTruth


@dataclass
class Prediction:
    query_index: int
    predicted: GroundTruth  # label of the matched database entry
    entry_index: int


@dataclass
class EvalReport:
    score: float
    e_d_m: float | None  # None when no query was classified correctly
    n_total: int
    n_correct: int

    def to_json(self) -> str:
        return json.dumps(
            {
                "score": self.score,
                "e_d_m": self.e_d_m,
                "n_total": self.n_total,
                "n_correct": self.n_correct,
            }
        )


def _is_correct(pred: Prediction, truth: GroundTruth) -> bool:
    return (
        pred.predicted.building_id == truth.building_id
        and pred.predicted.floor == truth.floor
    )


def score(predictions, truths) -> float:
    """Fraction of queries with both building and floor predicted correctly."""
    if len(predictions) != len(truths):
        raise ValueError("predictions and truths must align")
    if not predictions:
        raise ValueError("cannot score an empty prediction set")
    hits = sum(_is_correct(p, t) for p, t in zip(predictions, truths))
    return hits / len(predictions)


def mean_distance_error(predictions, truths) -> float | None:
    """Mean planar metres between correct queries and their matched locations.

    Returns None (undefined) when nothing was classified correctly.
    """
    if len(predictions) != len(truths):
        raise ValueError("predictions and truths must align")
    dists = [
        distance(t, p.predicted)
        for p, t in zip(predictions, truths)
        if _is_correct(p, t)
    ]
    if not dists:
        return None
    return sum(dists) / len(dists)


def evaluate_predictions(predictions, truths) -> EvalReport:
    n_correct = sum(_is_correct(p, t) for p, t in zip(predictions, truths))
    return EvalReport(
        score=score(predictions, truths),
        e_d_m=mean_distance_error(predictions, truths),
        n_total=len(predictions),
        n_correct=n_correct,
    )


def export_matches(fh, predictions, truths, posteriors=None) -> None:
    """One CSV row per query: truth pose, matched pose, correct flag.

    Enough for an external plotter to redraw the match lines; floor-mismatch
    rows are identifiable as true_floor != matched_floor. A posterior column
    is appended when posteriors are given.
    """
    header = (
        "query_index,true_lon,true_lat,true_floor,true_building,"
        "matched_entry,matched_lon,matched_lat,matched_floor,matched_building,correct"
    )
    fh.write(header + (",posterior\n" if posteriors is not None else "\n"))
    for i, (p, t) in enumerate(zip(predictions, truths)):
        m = p.predicted
        row = (
            f"{p.query_index},{float(t.longitude)!r},{float(t.latitude)!r},"
            f"{t.floor},{t.building_id},{p.entry_index},"
            f"{float(m.longitude)!r},{float(m.latitude)!r},{m.floor},{m.building_id},"
            f"{int(_is_correct(p, t))}"
        )
        if posteriors is not None:
            row += f",{float(posteriors[i])!r}"
        fh.write(row + "\n")
