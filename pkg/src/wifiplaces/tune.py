"""Grid search over the detector parameters on a subtraining/validation split.

Both parameters sweep an exponential grid: exponents run from a start down
to an end in fixed steps and the parameter value is exp(exponent). The
Chow-Liu tree is fixed across the grid (it depends only on the environment
scans); each grid point only rebuilds the detector-dependent place beliefs,
scores the validation queries by building+floor accuracy, and records the
result in the surface.

Per grid point the scorer needs one gather of the per-feature log-term
tables and one (entries x features) @ (features x queries) product; the
per-query additive constant is dropped since only the argmax entry matters.
The full default grid (80 x 121 points) is hours of work on the real
dataset; progress is reported per pzge row.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass

import numpy as np

from .chowliu import ChowLiuTree
from .dataset import Dataset
from .featurize import BinningConfig, featurize_records
from .inference import DetectorModel, belief_levels, coupling_tables, _class_index


def _sweep(start: float, end: float, step: float) -> np.ndarray:
    """start, start-step, ... while >= end - 1e-12 (start always included)."""
    count = int(math.floor((start - end) / step + 1e-9)) + 1
    return start - step * np.arange(count)


@dataclass(frozen=True)
class GridSpec:
    """Natural-log exponent ranges; parameter value = exp(exponent)."""

    pzge_log_start: float = -0.01
    pzge_log_end: float = -4.0
    pzgne_log_start: float = -2.0
    pzgne_log_end: float = -8.0
    log_step: float = 0.05

    def __post_init__(self):
        if self.pzge_log_start < self.pzge_log_end:
            raise ValueError("pzge exponent start must not be below its end")
        if self.pzgne_log_start < self.pzgne_log_end:
            raise ValueError("pzgne exponent start must not be below its end")
        if self.log_step <= 0:
            raise ValueError("log_step must be positive")

    def pzge_values(self) -> np.ndarray:
        return np.exp(_sweep(self.pzge_log_start, self.pzge_log_end, self.log_step))

    def pzgne_values(self) -> np.ndarray:
        return np.exp(_sweep(self.pzgne_log_start, self.pzgne_log_end, self.log_step))


@dataclass
class TuneResult:
    pzge_values: np.ndarray
    pzgne_values: np.ndarray
    surface: np.ndarray  # (len(pzge_values), len(pzgne_values)) accuracies
    best_pzge: float
    best_pzgne: float
    best_score: float


def split_for_validation(place_db_scans, seed: int, subtrain_fraction: float = 0.7):
    """Per-cluster split of the database scans into subtraining and validation.

    Clusters of one scan go entirely to subtraining; larger clusters keep at
    least one scan on each side. Deterministic for a given seed.
    """
    if not 0.0 < subtrain_fraction < 1.0:
        raise ValueError("subtrain_fraction must lie in (0, 1)")
    rng = np.random.default_rng(seed)
    subtraining = []
    validation = []
    for members in place_db_scans:
        members = list(members)
        n = len(members)
        if n == 0:
            subtraining.append([])
            validation.append([])
            continue
        if n == 1:
            n_sub = 1
        else:
            n_sub = min(n - 1, max(1, int(math.floor(subtrain_fraction * n + 0.5))))
        perm = rng.permutation(n)
        subtraining.append(sorted(members[i] for i in perm[:n_sub]))
        validation.append(sorted(members[i] for i in perm[n_sub:]))
    return subtraining, validation


def _flatten(per_cluster):
    return [idx for members in per_cluster for idx in members]


def score_grid_point(
    pzge: float,
    pzgne: float,
    entry_xf: np.ndarray,
    entry_floor: np.ndarray,
    entry_bld: np.ndarray,
    flat_cidx: np.ndarray,
    truth_floor: np.ndarray,
    truth_bld: np.ndarray,
    tree: ChowLiuTree,
    buffers=None,
) -> float:
    """Building+floor accuracy of one detector setting on prepared arrays."""
    detector = DetectorModel(pzge=pzge, pzgne=pzgne)
    a, b = coupling_tables(tree, detector)
    b0, b1 = belief_levels(tree, detector)
    t0 = np.log(b + (a - b) * b0[:, None]).ravel()
    t1 = np.log(b + (a - b) * b1[:, None]).ravel()
    if buffers is None:
        w0 = np.empty(flat_cidx.shape)
        w1 = np.empty(flat_cidx.shape)
        scores = np.empty((entry_xf.shape[0], flat_cidx.shape[1]))
    else:
        w0, w1, scores = buffers
    np.take(t0, flat_cidx, out=w0)
    np.take(t1, flat_cidx, out=w1)
    w1 -= w0
    np.dot(entry_xf, w1, out=scores)
    pred = scores.argmax(axis=0)
    hit = (entry_floor[pred] == truth_floor) & (entry_bld[pred] == truth_bld)
    return float(hit.mean())


def grid_search(
    subtraining,
    validation,
    dataset: Dataset,
    tree: ChowLiuTree,
    config: BinningConfig,
    grid: GridSpec = GridSpec(),
    progress=None,
) -> TuneResult:
    """Sweep the grid; best point breaks ties toward larger pzge, then pzgne.

    subtraining/validation are the per-cluster record-index lists from
    split_for_validation. Every surface value is reproducible by re-running
    that single point (score_grid_point is deterministic).
    """
    sub_idx = _flatten(subtraining)
    val_idx = _flatten(validation)
    if not val_idx:
        raise ValueError("validation set is empty")
    if not sub_idx:
        raise ValueError("subtraining set is empty")

    entry_bits = featurize_records(dataset, sub_idx, config)
    entry_xf = entry_bits.astype(np.float64)
    _, _, floors, blds = dataset.truth_arrays()
    entry_floor = floors[sub_idx]
    entry_bld = blds[sub_idx]
    truth_floor = floors[val_idx]
    truth_bld = blds[val_idx]

    query_bits = featurize_records(dataset, val_idx, config)
    cidx = _class_index(query_bits, tree)  # (Q, d)
    d = tree.n_features
    flat_cidx = (np.arange(d, dtype=np.int64)[:, None] * 4 + cidx.T).astype(np.int64)

    pzge_values = grid.pzge_values()
    pzgne_values = grid.pzgne_values()
    surface = np.empty((len(pzge_values), len(pzgne_values)))
    buffers = (
        np.empty(flat_cidx.shape),
        np.empty(flat_cidx.shape),
        np.empty((entry_xf.shape[0], flat_cidx.shape[1])),
    )
    for i, pzge in enumerate(pzge_values):
        for j, pzgne in enumerate(pzgne_values):
            surface[i, j] = score_grid_point(
                float(pzge),
                float(pzgne),
                entry_xf,
                entry_floor,
                entry_bld,
                flat_cidx,
                truth_floor,
                truth_bld,
                tree,
                buffers,
            )
        if progress is not None:
            progress(i + 1, len(pzge_values), float(surface[i].max()))

    flat_best = int(surface.argmax())  # both value sequences descend, so the
    bi, bj = divmod(flat_best, len(pzgne_values))  # first max has largest params
    return TuneResult(
        pzge_values=pzge_values,
        pzgne_values=pzgne_values,
        surface=surface,
        best_pzge=float(pzge_values[bi]),
        best_pzgne=float(pzgne_values[bj]),
        best_score=float(surface[bi, bj]),
    )


def export_surface(result: TuneResult, fh) -> None:
    """CSV `pzge,pzgne,score` in grid enumeration order."""
    fh.write("pzge,pzgne,score\n")
    for i, pzge in enumerate(result.pzge_values):
        for j, pzgne in enumerate(result.pzgne_values):
            fh.write(
                f"{float(pzge)!r},{float(pzgne)!r},{float(result.surface[i, j])!r}\n"
            )


def default_progress(done: int, total: int, row_best: float) -> None:
    print(
        f"  pzge row {done}/{total} swept (row best score {row_best:.4f})",
        file=sys.stderr,
        flush=True,
    )
