"""WiFi-fingerprint indoor place recognition.

Binary feature vectors from thresholded RSSI readings, a Chow-Liu tree over
inter-network dependencies, and a detector-model posterior over a database
of known places.
"""

from .chowliu import (
    ChowLiuTree,
    FeatureStats,
    build_tree,
    estimate_stats,
    mutual_information,
    tree_joint,
)
from .cluster import (
    ClusterAssignment,
    ClusterParams,
    SplitResult,
    dbscan,
    distance,
    split_dataset,
)
from .dataset import (
    ApRegistry,
    Dataset,
    DatasetError,
    GroundTruth,
    Record,
    WifiScan,
    load_ujiindoorloc,
    registry_size,
)
from .evaluate import EvalReport, Prediction, evaluate_predictions, mean_distance_error, score
from .featurize import (
    BinningConfig,
    binarize_reading,
    featurize_records,
    featurize_scan,
    make_thresholds,
)
from .inference import (
    DetectorModel,
    InferenceError,
    MatchResult,
    PlaceDatabase,
    PlaceEntry,
    build_place_database,
    init_place,
    match,
    observation_likelihood,
)
from .model_io import load_model, save_model
from .tune import GridSpec, TuneResult, grid_search, split_for_validation

__version__ = "0.1.0"

__all__ = [
    "ApRegistry",
    "BinningConfig",
    "ChowLiuTree",
    "ClusterAssignment",
    "ClusterParams",
    "Dataset",
    "DatasetError",
    "DetectorModel",
    "EvalReport",
    "FeatureStats",
    "GridSpec",
    "GroundTruth",
    "InferenceError",
    "MatchResult",
    "PlaceDatabase",
    "PlaceEntry",
    "Prediction",
    "Record",
    "SplitResult",
    "TuneResult",
    "WifiScan",
    "binarize_reading",
    "build_place_database",
    "build_tree",
    "dbscan",
    "distance",
    "estimate_stats",
    "evaluate_predictions",
    "featurize_records",
    "featurize_scan",
    "grid_search",
    "init_place",
    "load_model",
    "load_ujiindoorloc",
    "make_thresholds",
    "match",
    "mean_distance_error",
    "mutual_information",
    "observation_likelihood",
    "registry_size",
    "save_model",
    "score",
    "split_dataset",
    "split_for_validation",
    "tree_joint",
]
