"""Same-location grouping of training records and the environment/database split.

DBSCAN runs over a metric that is planar Euclidean on (longitude, latitude)
when two records share building and floor, and infinite otherwise, so scans
on vertically adjacent floors never cluster together. With min_pts = 1 the
result equals the connected components of the eps-neighborhood graph, but
core/border/noise semantics are implemented in full so other parameter
values stay usable.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from .dataset import Dataset, GroundTruth, Record

NOISE = -1


@dataclass(frozen=True)
class ClusterParams:
    eps: float = 1.0
    min_pts: int = 1

    def __post_init__(self):
        if self.eps <= 0:
            raise ValueError("eps must be positive")
        if self.min_pts < 1:
            raise ValueError("min_pts must be at least 1")


@dataclass
class ClusterAssignment:
    labels: np.ndarray  # cluster id per record index; NOISE for noise points
    count: int

    def members(self) -> list[np.ndarray]:
        """Record indices per cluster id, ascending within each cluster."""
        return [np.flatnonzero(self.labels == cid) for cid in range(self.count)]


@dataclass
class SplitResult:
    environment_scans: list[int]  # one record index per cluster
    place_db_scans: list[list[int]]  # up to 10 record indices per cluster
    rng_seed: int


def distance(a: GroundTruth, b: GroundTruth) -> float:
    """Planar metres within one (building, floor); infinite across."""
    if a.building_id != b.building_id or a.floor != b.floor:
        return math.inf
    return math.hypot(a.longitude - b.longitude, a.latitude - b.latitude)


def _extract_points(records):
    if isinstance(records, Dataset):
        records = records.records
    n = len(records)
    xy = np.empty((n, 2))
    group = np.empty(n, dtype=np.int64)
    for i, r in enumerate(records):
        t = r.truth if isinstance(r, Record) else r
        xy[i] = (t.longitude, t.latitude)
        group[i] = t.building_id * 16 + t.floor
    return xy, group


class _NeighborIndex:
    """eps-cell grid per (building, floor) group for exact range queries."""

    def __init__(self, xy, group, eps):
        self.xy = xy
        self.group = group
        self.eps = eps
        self.cells: dict[tuple[int, int, int], list[int]] = {}
        inv = 1.0 / eps
        self.cell_ids = np.empty((len(xy), 2), dtype=np.int64)
        self.cell_ids[:, 0] = np.floor(xy[:, 0] * inv)
        self.cell_ids[:, 1] = np.floor(xy[:, 1] * inv)
        for i in range(len(xy)):
            key = (int(group[i]), int(self.cell_ids[i, 0]), int(self.cell_ids[i, 1]))
            self.cells.setdefault(key, []).append(i)

    def query(self, i: int) -> np.ndarray:
        """Indices within eps of point i (same group, includes i), ascending."""
        g = int(self.group[i])
        cx, cy = int(self.cell_ids[i, 0]), int(self.cell_ids[i, 1])
        cand = []
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                cand.extend(self.cells.get((g, cx + dx, cy + dy), ()))
        cand = np.asarray(sorted(cand), dtype=np.int64)
        d2 = np.sum((self.xy[cand] - self.xy[i]) ** 2, axis=1)
        return cand[d2 <= self.eps * self.eps]


def dbscan(records, params: ClusterParams = ClusterParams()) -> ClusterAssignment:
    """Standard DBSCAN; deterministic (seeds scanned in record order).

    A point is core when its eps-neighborhood (itself included) holds at
    least min_pts points. Border points join the first cluster reaching
    them; unreachable non-core points are labelled NOISE.
    """
    if isinstance(records, Dataset):
        n = len(records.records)
    else:
        n = len(records)
    if n == 0:
        return ClusterAssignment(labels=np.empty(0, dtype=np.int64), count=0)
    xy, group = _extract_points(records)
    index = _NeighborIndex(xy, group, params.eps)

    UNSEEN = -2
    labels = np.full(n, UNSEEN, dtype=np.int64)
    cid = 0
    for i in range(n):
        if labels[i] != UNSEEN:
            continue
        neigh = index.query(i)
        if len(neigh) < params.min_pts:
            labels[i] = NOISE
            continue
        labels[i] = cid
        queue = deque(int(j) for j in neigh if j != i)
        while queue:
            j = queue.popleft()
            if labels[j] == NOISE:
                labels[j] = cid  # border point
                continue
            if labels[j] != UNSEEN:
                continue
            labels[j] = cid
            jn = index.query(j)
            if len(jn) >= params.min_pts:
                queue.extend(int(q) for q in jn if labels[q] == UNSEEN or labels[q] == NOISE)
        cid += 1
    return ClusterAssignment(labels=labels, count=cid)


def split_dataset(
    assignment: ClusterAssignment, seed: int, db_scans_per_cluster: int = 10
) -> SplitResult:
    """Per cluster: one random environment scan, then up to 10 random database scans.

    Deterministic for a given seed; clusters are consumed in id order and the
    two partitions are disjoint by construction. Noise points (possible only
    with min_pts > 1) join neither partition.
    """
    rng = np.random.default_rng(seed)
    environment = []
    place_db = []
    for members in assignment.members():
        pick = int(rng.integers(len(members)))
        env_idx = int(members[pick])
        rest = np.delete(members, pick)
        take = min(db_scans_per_cluster, len(rest))
        if take:
            chosen = rng.choice(rest, size=take, replace=False)
            db = sorted(int(x) for x in chosen)
        else:
            db = []
        environment.append(env_idx)
        place_db.append(db)
    return SplitResult(
        environment_scans=environment, place_db_scans=place_db, rng_seed=seed
    )


def export_split(split: SplitResult, assignment: ClusterAssignment, fh) -> None:
    """CSV `record_index,cluster_id,partition` with partition in {env, db}."""
    fh.write("record_index,cluster_id,partition\n")
    for cid, idx in enumerate(split.environment_scans):
        fh.write(f"{idx},{cid},env\n")
    for cid, members in enumerate(split.place_db_scans):
        for idx in members:
            fh.write(f"{idx},{cid},db\n")
