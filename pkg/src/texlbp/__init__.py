"""Multi-neighborhood local binary pattern texture classification."""

from .classifier import DistanceMetric, KnnClassifier, KnnConfig, Prediction, chi_square, knn_predict, minkowski, vote
from .evaluation import (
    ConfusionMatrix,
    EvalReport,
    FoldPlan,
    cohen_kappa,
    cross_validate,
    loo_split,
    precision_recall,
    render_report,
    stratified_kfold,
)
from .features import FeatureStore, FeatureVector, build_store, extract_multi, normalize_l1, read_store, write_store
from .image_io import GrayImage, LabeledImage, load_dataset, load_image, to_grayscale
from .lbp import (
    Histogram,
    LbpConfig,
    LbpMap,
    build_u2_table,
    lbp_code,
    lbp_histogram,
    lbp_map,
    map_riu2,
    standard_configs,
    sample_neighbor,
    transitions,
)

__version__ = "0.1.0"
