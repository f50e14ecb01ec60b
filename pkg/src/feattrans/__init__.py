"""Feature-space translation toolkit.

Learns translators between visual feature spaces with a hybrid auto-encoder
(two encoders, one shared decoder), scores translated features with
retrieval mAP, and quantifies inter-feature affinity via directed/undirected
affinity matrices and their minimum spanning tree.
"""

from .feature_io import FeatureSet, GroundTruth, PairedSet, align_pairs, l2_normalize
from .translator import TranslatorModel, TrainConfig, build, train, translate, reconstruct
from .retrieval import EvalResult, evaluate, cross_feature_evaluate
from .affinity import AffinityMatrix, build_dam, normalize_cols, normalize_rows, uam
from .mst import MstResult, kruskal

__all__ = [
    "FeatureSet",
    "GroundTruth",
    "PairedSet",
    "align_pairs",
    "l2_normalize",
    "TranslatorModel",
    "TrainConfig",
    "build",
    "train",
    "translate",
    "reconstruct",
    "EvalResult",
    "evaluate",
    "cross_feature_evaluate",
    "AffinityMatrix",
    "build_dam",
    "normalize_rows",
    "normalize_cols",
    "uam",
    "MstResult",
    "kruskal",
]

__version__ = "0.1.0"
