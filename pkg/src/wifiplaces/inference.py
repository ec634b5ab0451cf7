"""Place recognition core: detector model, place database, posterior over places.

Each database place carries per-feature existence beliefs beta_q = p(e_q=1|L).
A query's likelihood factors along the Chow-Liu tree; each factor mixes the
detector conditional with the tree conditional through

    p(z_q | e_q=s, z_p)  proportional to  p(z_q | e_q=s) * p(z_q | z_p) / p(z_q)

normalized over z_q, then marginalizes e_q with the place beliefs. Because a
database built from defining scans has only two possible belief values per
feature, the per-entry log-likelihood collapses exactly to

    const(query) + bits_entry . (T1 - T0)

with T1/T0 the per-feature log-terms at the two belief levels, so scoring a
query against every entry is a single matrix-vector product. The per-entry
observation_likelihood() keeps the generic belief formula as the reference
path; both agree to rounding and the tests hold them together.

All probability work runs in the log domain with log-sum-exp normalization.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .chowliu import ChowLiuTree
from .dataset import ApRegistry, Dataset, GroundTruth, WifiScan
from .featurize import BinningConfig, feature_length, featurize_records, featurize_scan


class InferenceError(ValueError):
    """Degenerate model state (non-interior probabilities, layout mismatch)."""


@dataclass(frozen=True)
class DetectorModel:
    """False-detection parameters: pzge = p(z=1|e=0), pzgne = p(z=0|e=1)."""

    pzge: float
    pzgne: float

    def __post_init__(self):
        for name, v in (("pzge", self.pzge), ("pzgne", self.pzgne)):
            if not 0.0 < v < 1.0:
                raise InferenceError(f"{name} must lie strictly inside (0, 1), got {v}")


@dataclass
class PlaceEntry:
    belief: np.ndarray  # (d,) p(e_q = 1 | L)
    label: GroundTruth
    source_record: int


def belief_levels(tree: ChowLiuTree, detector: DetectorModel):
    """The two possible beliefs per feature: (beta_for_z*=0, beta_for_z*=1).

    Bayes with prior p(e_q=1) = tree marginal and the detector likelihood.
    """
    prior = tree.marginal
    if not np.all((prior > 0.0) & (prior < 1.0)):
        raise InferenceError("tree marginals must be interior; train with alpha > 0")
    hit = 1.0 - detector.pzgne  # p(z=1 | e=1)
    b1_num = hit * prior
    b1 = b1_num / (b1_num + detector.pzge * (1.0 - prior))
    b0_num = detector.pzgne * prior
    b0 = b0_num / (b0_num + (1.0 - detector.pzge) * (1.0 - prior))
    return b0, b1


def init_place(
    observation: np.ndarray, tree: ChowLiuTree, detector: DetectorModel
) -> np.ndarray:
    """Belief vector for a place defined by one observed feature vector."""
    observation = np.asarray(observation, dtype=np.uint8)
    if observation.shape != (tree.n_features,):
        raise InferenceError("observation length does not match the tree")
    b0, b1 = belief_levels(tree, detector)
    return np.where(observation == 1, b1, b0)


def coupling_tables(tree: ChowLiuTree, detector: DetectorModel):
    """(a, b) with a[q, 2*zp+z] = p(z_q=z | e=1, z_p=zp), b likewise for e=0.

    Root rows carry the pure detector conditionals (their tree rows equal the
    marginal, so the correction cancels). Raises on a degenerate normalizer,
    which interior probabilities cannot produce.
    """
    m1 = tree.marginal
    m0 = 1.0 - m1
    # likelihood ratios p(z|zp)/p(z), indexed like cond
    ratio = np.empty_like(tree.cond)
    ratio[:, 0] = tree.cond[:, 0] / m0
    ratio[:, 1] = tree.cond[:, 1] / m1
    ratio[:, 2] = tree.cond[:, 2] / m0
    ratio[:, 3] = tree.cond[:, 3] / m1
    hit = 1.0 - detector.pzgne
    miss = detector.pzgne
    fa = detector.pzge
    tn = 1.0 - detector.pzge
    a = np.empty_like(ratio)
    b = np.empty_like(ratio)
    for zp in (0, 1):
        r0 = ratio[:, 2 * zp + 0]
        r1 = ratio[:, 2 * zp + 1]
        na0, na1 = miss * r0, hit * r1
        za = na0 + na1
        nb0, nb1 = tn * r0, fa * r1
        zb = nb0 + nb1
        if np.any(za <= 0.0) or np.any(zb <= 0.0):
            raise InferenceError("degenerate coupling normalizer")
        a[:, 2 * zp + 0] = na0 / za
        a[:, 2 * zp + 1] = na1 / za
        b[:, 2 * zp + 0] = nb0 / zb
        b[:, 2 * zp + 1] = nb1 / zb
    return a, b


def _class_index(bits: np.ndarray, tree: ChowLiuTree) -> np.ndarray:
    """Per-feature table column 2*z_parent + z for one query or a batch."""
    pg = tree.parent_or_self()
    if bits.ndim == 1:
        return (2 * bits[pg] + bits).astype(np.int64)
    return (2 * bits[:, pg] + bits).astype(np.int64)


def observation_likelihood(
    entry: PlaceEntry, z: np.ndarray, db: "PlaceDatabase"
) -> float:
    """Reference log p(Z | L): per-feature mixture of the coupled conditionals."""
    z = np.asarray(z, dtype=np.uint8)
    if z.shape != (db.tree.n_features,):
        raise InferenceError("feature vector length does not match the database")
    a, b = coupling_tables(db.tree, db.detector)
    cidx = _class_index(z, db.tree)
    rows = np.arange(db.tree.n_features)
    av = a[rows, cidx]
    bv = b[rows, cidx]
    mixed = bv + (av - bv) * entry.belief
    return float(np.log(mixed).sum())


class PlaceDatabase:
    """Immutable database of known places, bit-backed.

    Entries are stored as their defining feature bits plus shared tree,
    detector and binning; belief vectors are materialized on demand from the
    two per-feature belief levels.
    """

    def __init__(
        self,
        bits: np.ndarray,
        labels: list[GroundTruth],
        source_records,
        tree: ChowLiuTree,
        detector: DetectorModel,
        config: BinningConfig,
        registry: ApRegistry,
    ):
        bits = np.ascontiguousarray(bits, dtype=np.uint8)
        if bits.ndim != 2 or bits.shape[1] != tree.n_features:
            raise InferenceError("entry bits do not match the tree feature count")
        if len(labels) != bits.shape[0]:
            raise InferenceError("one label per entry required")
        if feature_length(registry, config) != tree.n_features:
            raise InferenceError("registry/binning layout does not match the tree")
        self.bits = bits
        self.labels = list(labels)
        self.source_records = np.asarray(source_records, dtype=np.int64)
        self.tree = tree
        self.detector = detector
        self.config = config
        self.registry = registry
        self._beta_levels = belief_levels(tree, detector)
        self._xf: np.ndarray | None = None

    @property
    def n_entries(self) -> int:
        return self.bits.shape[0]

    def entry(self, i: int) -> PlaceEntry:
        b0, b1 = self._beta_levels
        belief = np.where(self.bits[i] == 1, b1, b0)
        return PlaceEntry(
            belief=belief, label=self.labels[i], source_record=int(self.source_records[i])
        )

    @property
    def entries(self) -> list[PlaceEntry]:
        return [self.entry(i) for i in range(self.n_entries)]

    def label_arrays(self):
        n = self.n_entries
        lon = np.empty(n)
        lat = np.empty(n)
        floor = np.empty(n, dtype=np.int64)
        bld = np.empty(n, dtype=np.int64)
        for i, t in enumerate(self.labels):
            lon[i], lat[i], floor[i], bld[i] = (
                t.longitude,
                t.latitude,
                t.floor,
                t.building_id,
            )
        return lon, lat, floor, bld

    def _entry_matrix(self) -> np.ndarray:
        if self._xf is None:
            self._xf = self.bits.astype(np.float64)
        return self._xf


def _loglik_block(db: PlaceDatabase, query_bits: np.ndarray) -> np.ndarray:
    """(n_entries, n_queries) log-likelihood block via the bit decomposition."""
    a, b = coupling_tables(db.tree, db.detector)
    b0, b1 = db._beta_levels
    t0 = np.log(b + (a - b) * b0[:, None])  # (d, 4)
    t1 = np.log(b + (a - b) * b1[:, None])
    cidx = _class_index(query_bits, db.tree)  # (Q, d)
    rows = np.arange(db.tree.n_features)[:, None]
    w0 = t0[rows, cidx.T]  # (d, Q)
    w1 = t1[rows, cidx.T]
    const = w0.sum(axis=0)
    w1 -= w0
    scores = db._entry_matrix() @ w1
    scores += const[None, :]
    return scores


def loglik_matrix(
    db: PlaceDatabase, query_bits: np.ndarray, chunk: int = 256
) -> np.ndarray:
    """Log p(Z_j | L_e) for every entry e and query j, chunked over queries."""
    query_bits = np.atleast_2d(np.asarray(query_bits, dtype=np.uint8))
    if query_bits.shape[1] != db.tree.n_features:
        raise InferenceError("feature vector length does not match the database")
    out = np.empty((db.n_entries, query_bits.shape[0]))
    for lo in range(0, query_bits.shape[0], chunk):
        hi = min(lo + chunk, query_bits.shape[0])
        out[:, lo:hi] = _loglik_block(db, query_bits[lo:hi])
    return out


@dataclass
class MatchResult:
    """Entries ranked by posterior (descending, ties to the lower index)."""

    entry_order: np.ndarray  # (E,) entry indices
    posteriors: np.ndarray  # (E,) aligned with entry_order, sums to 1
    predicted_label: GroundTruth

    @property
    def predicted_entry(self) -> int:
        return int(self.entry_order[0])

    def top(self, k: int):
        k = min(k, len(self.entry_order))
        return [
            (int(self.entry_order[i]), float(self.posteriors[i])) for i in range(k)
        ]


def _posterior_from_loglik(loglik: np.ndarray) -> np.ndarray:
    # uniform place prior; the constant cancels in the normalization
    m = loglik.max()
    w = np.exp(loglik - m)
    return w / w.sum()


def match_bits(bits: np.ndarray, db: PlaceDatabase) -> MatchResult:
    if db.n_entries == 0:
        raise InferenceError("empty place database")
    loglik = loglik_matrix(db, bits)[:, 0]
    post = _posterior_from_loglik(loglik)
    order = np.argsort(-post, kind="stable")
    return MatchResult(
        entry_order=order,
        posteriors=post[order],
        predicted_label=db.labels[int(order[0])],
    )


def match(scan: WifiScan, db: PlaceDatabase) -> MatchResult:
    """Posterior over database places for one scan; top entry is the prediction."""
    bits = featurize_scan(scan, db.registry, db.config)
    return match_bits(bits, db)


def match_many(db: PlaceDatabase, query_bits: np.ndarray, chunk: int = 256):
    """Top-1 entry and its posterior for a batch of queries.

    Returns (entry_index (Q,), posterior (Q,)); argmax ties resolve to the
    lower entry index, matching match().
    """
    if db.n_entries == 0:
        raise InferenceError("empty place database")
    query_bits = np.atleast_2d(np.asarray(query_bits, dtype=np.uint8))
    nq = query_bits.shape[0]
    top = np.empty(nq, dtype=np.int64)
    post = np.empty(nq)
    for lo in range(0, nq, chunk):
        hi = min(lo + chunk, nq)
        block = _loglik_block(db, query_bits[lo:hi])
        idx = block.argmax(axis=0)
        m = block[idx, np.arange(block.shape[1])]
        lse = m + np.log(np.exp(block - m[None, :]).sum(axis=0))
        top[lo:hi] = idx
        post[lo:hi] = np.exp(m - lse)
    return top, post


def build_place_database(
    split,
    dataset: Dataset,
    tree: ChowLiuTree,
    detector: DetectorModel,
    config: BinningConfig,
) -> PlaceDatabase:
    """One entry per place-database scan, carrying that record's ground truth."""
    if feature_length(dataset.registry, config) != tree.n_features:
        raise InferenceError("tree was trained on a different feature layout")
    indices = [idx for members in split.place_db_scans for idx in members]
    bits = featurize_records(dataset, indices, config)
    labels = [dataset.records[i].truth for i in indices]
    return PlaceDatabase(
        bits=bits,
        labels=labels,
        source_records=indices,
        tree=tree,
        detector=detector,
        config=config,
        registry=dataset.registry,
    )


def export_match_results(fh, rows) -> None:
    """CSV rows (query_index, entry_index, posterior, label) -> documented schema."""
    fh.write("query_index,entry_index,posterior,pred_building,pred_floor,pred_lon,pred_lat\n")
    for query_index, entry_index, posterior, label in rows:
        fh.write(
            f"{query_index},{entry_index},{float(posterior)!r},{label.building_id},"
            f"{label.floor},{float(label.longitude)!r},{float(label.latitude)!r}\n"
        )
