"""Bayesian ML/MAP re-scoring of classifier logits.

Per-class Gaussian-KDE likelihood CDFs and normalized-histogram prior CDFs
replace the softmax read-out of an already trained classifier. Bandwidths,
bin counts and the smoothing constant are tuned by a genetic algorithm.
A small LiDAR toolkit prepares object crops.
"""

from .density import KdeModel, NhModel, fit_histogram, fit_kde, kde_cdf, nh_cdf
from .exceptions import (
    FitError,
    LogitBayesError,
    ModelFormatError,
    NotFittedError,
    ParameterError,
    ParseError,
)
from .inference import (
    BayesScorer,
    LogitSample,
    fit_scorer,
    map_score,
    ml_score,
    predict,
    softmax,
)
from .metrics import EvalReport, confusion_matrix, evaluate, format_comparison
from .pointcloud import (
    BBox2D,
    CalibrationSet,
    PointCloud,
    cluster_foreground,
    crop_to_bbox,
    project_to_image,
    resample,
)
from .tuner import Bounds, GaConfig, HyperParams, fitness, tune

__version__ = "0.1.0"
