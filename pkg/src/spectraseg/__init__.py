"""Shape-aware zero-shot semantic segmentation toolkit.

Classifies pixel features against text anchor embeddings, extracts
candidate segments from the spectrum of a pixel affinity graph, fuses the
two by IoU matching, and evaluates/analyzes the results. Feature maps are
produced by external encoders and arrive as files.
"""

from .align import (
    AnchorSet,
    align_loss,
    align_loss_grad,
    compute_logits,
    predict_labels,
)
from .arrayio import read_npy, read_pgm, write_npy, write_pgm
from .boundary import (
    bce_loss,
    estimate_affine,
    mask_to_edges,
    shape_loss,
    sobel,
    split_patches,
    total_loss,
)
from .folds import FoldSpec, class_names, fold_classes, ids_to_names
from .fusion import FUSION_RULE_VERSION, FusionTrace, fuse_predictions
from .metrics import (
    compactness,
    embedding_locality,
    evaluate_fold,
    format_score,
    iou,
    macro_mean,
    pearson,
)
from .params import HyperParams, RunConfig, build_run_config, parse_config_file
from .spectral import (
    LaplacianSpectrum,
    color_position_features,
    combine_affinity,
    decompose_image,
    eigensegments,
    eigensolve,
    normalized_laplacian,
    semantic_affinity,
    shape_affinity,
)

__version__ = "0.1.0"

__all__ = [
    "AnchorSet",
    "FUSION_RULE_VERSION",
    "FoldSpec",
    "FusionTrace",
    "HyperParams",
    "LaplacianSpectrum",
    "RunConfig",
    "align_loss",
    "align_loss_grad",
    "bce_loss",
    "build_run_config",
    "class_names",
    "color_position_features",
    "combine_affinity",
    "compactness",
    "compute_logits",
    "decompose_image",
    "eigensegments",
    "eigensolve",
    "embedding_locality",
    "estimate_affine",
    "evaluate_fold",
    "fold_classes",
    "format_score",
    "fuse_predictions",
    "ids_to_names",
    "iou",
    "macro_mean",
    "mask_to_edges",
    "normalized_laplacian",
    "parse_config_file",
    "pearson",
    "predict_labels",
    "read_npy",
    "read_pgm",
    "semantic_affinity",
    "shape_affinity",
    "shape_loss",
    "sobel",
    "split_patches",
    "total_loss",
    "write_npy",
    "write_pgm",
    "__version__",
]
