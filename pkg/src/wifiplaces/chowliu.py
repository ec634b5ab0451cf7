"""Chow-Liu dependence tree over binary features.

Marginal and pairwise statistics come from the environment scans with a
pseudo-count alpha on every cell (p1 = (c+a)/(n+2a), p11 = (c+a)/(n+4a)), so
smoothed probabilities stay strictly inside (0, 1) even for networks never
observed. The tree is the maximum-weight spanning forest of the pairwise
mutual-information graph; edges of exactly zero MI are treated as absent, so
with alpha = 0 the result may be a forest with one root per component.

Pairwise joints are never materialized as a dense d x d matrix: the builder
walks Prim's algorithm with one co-occurrence GEMV per added vertex, keeping
memory at O(n_samples * d).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class FeatureStats:
    """Sufficient statistics of a sample of binary feature vectors."""

    n_samples: int
    smoothing_alpha: float
    count1: np.ndarray  # (d,) number of samples with feature = 1
    bits: np.ndarray  # (n, d) uint8 sample matrix, kept for pairwise counts

    @property
    def n_features(self) -> int:
        return len(self.count1)

    @property
    def p1(self) -> np.ndarray:
        a = self.smoothing_alpha
        return (self.count1 + a) / (self.n_samples + 2.0 * a)

    def count11(self, q: int, v: int) -> int:
        return int(np.count_nonzero(self.bits[:, q] & self.bits[:, v]))

    def p11(self, q: int, v: int) -> float:
        a = self.smoothing_alpha
        return (self.count11(q, v) + a) / (self.n_samples + 4.0 * a)

    def pair_table(self, q: int, v: int) -> np.ndarray:
        """2x2 joint over (z_q, z_v) completed from p1 and p11, clamped at 0."""
        p1 = self.p1
        j11 = self.p11(q, v)
        t = np.array(
            [
                [1.0 - p1[q] - p1[v] + j11, p1[v] - j11],
                [p1[q] - j11, j11],
            ]
        )
        return np.maximum(t, 0.0)


def estimate_stats(vectors, alpha: float = 0.5) -> FeatureStats:
    """Stats from a non-empty stack of equal-length binary vectors."""
    bits = np.asarray(vectors, dtype=np.uint8)
    if bits.ndim != 2 or bits.shape[0] == 0:
        raise ValueError("need at least one feature vector")
    if alpha < 0:
        raise ValueError("alpha must be non-negative")
    if bits.max(initial=0) > 1:
        raise ValueError("feature vectors must be binary")
    return FeatureStats(
        n_samples=bits.shape[0],
        smoothing_alpha=float(alpha),
        count1=bits.sum(axis=0, dtype=np.int64),
        bits=bits,
    )


def mutual_information(stats: FeatureStats, q: int, v: int) -> float:
    """Pairwise MI in nats; >= 0 up to rounding. Exactly symmetric in (q, v)."""
    if q == v:
        raise ValueError("mutual information needs two distinct features")
    if q > v:  # canonical orientation makes the float sum order-independent
        q, v = v, q
    p1 = stats.p1
    table = stats.pair_table(q, v)
    marg_q = np.array([1.0 - p1[q], p1[q]])
    marg_v = np.array([1.0 - p1[v], p1[v]])
    total = 0.0
    for zq in (0, 1):
        for zv in (0, 1):
            cell = table[zq, zv]
            if cell > 0.0:
                total += cell * np.log(cell / (marg_q[zq] * marg_v[zv]))
    return float(total)


@dataclass
class ChowLiuTree:
    """Rooted spanning forest with per-feature conditional tables.

    parent[q] is -1 for roots. cond[q, 2*zp + z] = p(z_q = z | z_parent = zp);
    root rows repeat the marginal in both zp halves, so gathering with any
    parent bit yields p(z_root = z).
    """

    parent: np.ndarray  # (d,) int64
    roots: np.ndarray  # component roots, ascending
    cond: np.ndarray  # (d, 4) float64
    marginal: np.ndarray  # (d,) float64, p(z_q = 1)
    total_mi: float

    @property
    def n_features(self) -> int:
        return len(self.parent)

    def parent_or_self(self) -> np.ndarray:
        return np.where(self.parent >= 0, self.parent, np.arange(self.n_features))


def _mi_row(stats: FeatureStats, u: int, zf: np.ndarray) -> np.ndarray:
    """MI of feature u against every feature, vectorized (entry u unspecified)."""
    n = stats.n_samples
    a = stats.smoothing_alpha
    c11 = zf[:, u] @ zf  # exact integer counts in float
    p11 = (c11.astype(np.float64) + a) / (n + 4.0 * a)
    p1 = stats.p1
    pu = p1[u]
    j11 = p11
    j10 = np.maximum(pu - p11, 0.0)  # z_u=1, z_v=0
    j01 = np.maximum(p1 - p11, 0.0)
    j00 = np.maximum(1.0 - pu - p1 + p11, 0.0)
    out = np.zeros(stats.n_features)
    with np.errstate(divide="ignore", invalid="ignore"):
        for cell, denom in (
            (j11, pu * p1),
            (j10, pu * (1.0 - p1)),
            (j01, (1.0 - pu) * p1),
            (j00, (1.0 - pu) * (1.0 - p1)),
        ):
            term = cell * np.log(cell / denom)
            out += np.where(cell > 0.0, term, 0.0)
    return out


def build_tree(stats: FeatureStats) -> ChowLiuTree:
    """Maximum-MI spanning forest via Prim, deterministic.

    Vertex selection breaks ties toward the lower feature index and an
    earlier-found parent is kept on equal weights; each component is rooted
    at its lowest index. Only strictly positive MI connects vertices.
    """
    d = stats.n_features
    if d < 1:
        raise ValueError("need at least one feature")
    zf = stats.bits.astype(np.float32)
    key = np.full(d, -np.inf)
    best_parent = np.full(d, -1, dtype=np.int64)
    parent = np.full(d, -1, dtype=np.int64)
    visited = np.zeros(d, dtype=bool)
    roots = []
    total_mi = 0.0

    for _ in range(d):
        masked = np.where(visited, -np.inf, key)
        u = int(np.argmax(masked))
        if not masked[u] > 0.0:
            u = int(np.argmax(~visited))  # lowest unvisited starts a component
            roots.append(u)
        else:
            parent[u] = best_parent[u]
            total_mi += float(masked[u])
        visited[u] = True
        if visited.all():
            break
        row = _mi_row(stats, u, zf)
        row[visited] = -np.inf
        improved = row > key
        key[improved] = row[improved]
        best_parent[improved] = u

    p1 = stats.p1
    cond = np.empty((d, 4))
    cond[:, 0] = cond[:, 2] = 1.0 - p1
    cond[:, 1] = cond[:, 3] = p1
    nonroot = np.flatnonzero(parent >= 0)
    if len(nonroot):
        pa = parent[nonroot]
        a = stats.smoothing_alpha
        bq = stats.bits[:, nonroot].astype(np.float64)
        bp = stats.bits[:, pa].astype(np.float64)
        c11 = np.einsum("nq,nq->q", bq, bp)
        j11 = (c11 + a) / (stats.n_samples + 4.0 * a)
        j10 = np.maximum(p1[nonroot] - j11, 0.0)  # z=1, zp=0
        j01 = np.maximum(p1[pa] - j11, 0.0)  # z=0, zp=1
        j00 = np.maximum(1.0 - p1[nonroot] - p1[pa] + j11, 0.0)
        for zp, (jz0, jz1) in enumerate(((j00, j10), (j01, j11))):
            s = jz0 + jz1
            ok = s > 0.0
            cond[nonroot[ok], 2 * zp + 0] = jz0[ok] / s[ok]
            cond[nonroot[ok], 2 * zp + 1] = jz1[ok] / s[ok]
            # unreachable parent state (alpha = 0): fall back to the marginal
            cond[nonroot[~ok], 2 * zp + 0] = 1.0 - p1[nonroot[~ok]]
            cond[nonroot[~ok], 2 * zp + 1] = p1[nonroot[~ok]]
    return ChowLiuTree(
        parent=parent,
        roots=np.asarray(roots, dtype=np.int64),
        cond=cond,
        marginal=p1.astype(np.float64),
        total_mi=total_mi,
    )


def tree_joint(tree: ChowLiuTree, z) -> float:
    """Probability of a full assignment under the tree factorization."""
    z = np.asarray(z, dtype=np.int64)
    if z.shape != (tree.n_features,):
        raise ValueError(
            f"assignment length {z.shape} does not match {tree.n_features} features"
        )
    pg = tree.parent_or_self()
    factors = tree.cond[np.arange(tree.n_features), 2 * z[pg] + z]
    return float(np.prod(factors))
