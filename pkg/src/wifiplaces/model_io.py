"""Versioned JSON persistence of a trained model.

The document stores everything needed to reproduce match results bit-for-bit:
registry, binning, detector parameters, the Chow-Liu tree (parents, roots,
marginals, flattened conditional tables) and one record per place entry. An
entry's belief vector takes only two values per feature, both fixed by the
detector and the tree, so entries persist as their defining feature bits
(base64 of numpy packbits, big-endian bit order); beliefs are reconstructed
deterministically on load. Floats survive JSON round-trips exactly. Files are
written to a temporary name and renamed, so a crash never leaves a partial
model behind.
"""

from __future__ import annotations

import base64
import json
import os

import numpy as np

from .chowliu import ChowLiuTree
from .dataset import ApRegistry, GroundTruth
from .featurize import BinningConfig
from .inference import DetectorModel, PlaceDatabase

FORMAT_VERSION = 1


class ModelFormatError(ValueError):
    """Unreadable or wrong-version model file."""


def _pack_bits_row(row: np.ndarray) -> str:
    return base64.b64encode(np.packbits(row).tobytes()).decode("ascii")


def _unpack_bits_row(s: str, n: int) -> np.ndarray:
    raw = np.frombuffer(base64.b64decode(s), dtype=np.uint8)
    return np.unpackbits(raw, count=n)


def save_model(path, db: PlaceDatabase, split_seed: int) -> None:
    tree = db.tree
    doc = {
        "format_version": FORMAT_VERSION,
        "split_seed": int(split_seed),
        "registry": list(db.registry.names),
        "binning": {
            "range_low": db.config.range_low,
            "range_high": db.config.range_high,
            "bin_width": db.config.bin_width,
        },
        "detector": {"pzge": db.detector.pzge, "pzgne": db.detector.pzgne},
        "feature_count": int(tree.n_features),
        "tree": {
            "parent": tree.parent.tolist(),
            "roots": tree.roots.tolist(),
            "marginal": tree.marginal.tolist(),
            "cond": tree.cond.ravel().tolist(),
            "total_mi": float(tree.total_mi),
        },
        "entries": {
            "count": int(db.n_entries),
            "bit_encoding": "base64(packbits, big-endian)",
            "bits": [_pack_bits_row(db.bits[i]) for i in range(db.n_entries)],
            "labels": [
                [t.longitude, t.latitude, t.floor, t.building_id] for t in db.labels
            ],
            "source_records": db.source_records.tolist(),
        },
    }
    tmp = f"{path}.tmp"
    with open(tmp, "w") as fh:
        json.dump(doc, fh, separators=(",", ":"))
    os.replace(tmp, path)


def load_model(path):
    """Returns (PlaceDatabase, split_seed)."""
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ModelFormatError(f"{path}: not a model file ({exc})") from None
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise ModelFormatError(
            f"{path}: unsupported model format version {version!r}"
        )
    d = int(doc["feature_count"])
    tree_doc = doc["tree"]
    tree = ChowLiuTree(
        parent=np.asarray(tree_doc["parent"], dtype=np.int64),
        roots=np.asarray(tree_doc["roots"], dtype=np.int64),
        cond=np.asarray(tree_doc["cond"], dtype=np.float64).reshape(d, 4),
        marginal=np.asarray(tree_doc["marginal"], dtype=np.float64),
        total_mi=float(tree_doc["total_mi"]),
    )
    binning = doc["binning"]
    config = BinningConfig(
        range_low=binning["range_low"],
        range_high=binning["range_high"],
        bin_width=binning["bin_width"],
    )
    detector = DetectorModel(
        pzge=doc["detector"]["pzge"], pzgne=doc["detector"]["pzgne"]
    )
    entries = doc["entries"]
    n = int(entries["count"])
    bits = np.zeros((n, d), dtype=np.uint8)
    for i, packed in enumerate(entries["bits"]):
        bits[i] = _unpack_bits_row(packed, d)
    labels = [
        GroundTruth(
            longitude=float(lon),
            latitude=float(lat),
            floor=int(floor),
            building_id=int(bld),
        )
        for lon, lat, floor, bld in entries["labels"]
    ]
    db = PlaceDatabase(
        bits=bits,
        labels=labels,
        source_records=entries["source_records"],
        tree=tree,
        detector=detector,
        config=config,
        registry=ApRegistry(doc["registry"]),
    )
    return db, int(doc["split_seed"])
