"""Patch area transportation matching with coarse-to-fine subdivision."""

from .core import (
    BBox,
    Correspondence,
    CorrespondenceSet,
    DataFormatError,
    Image,
    InvalidInputError,
    PatchGrid,
    PatsError,
    TransportPlan,
    build_patch_grid,
)
from .ot import SinkhornConfig, cost_matrix, solve_transport
from .descriptors import (
    AreaBackend,
    DescriptorBackend,
    describe_patches,
    estimate_areas,
    read_desc_file,
)
from .matcher import (
    MatcherConfig,
    argmax_target,
    extract_correspondence,
    flood_region,
    match_grids,
)
from .subdivision import (
    HierarchyConfig,
    LevelSpec,
    WindowPair,
    area_expectation,
    crop_and_resize,
    run_hierarchy,
    scale_factor,
    subdivide,
    trim_subpatches,
)
from .synth import GroundTruthWarp, generate_pair, ground_truth_position
from .metrics import (
    EvalReport,
    LossConfig,
    concentration_loss,
    evaluate,
    inlier_loss,
    outlier_loss,
    split_inlier_outlier,
)
from .config import RunConfig, load_config, save_config
from ._kernels import BACKEND as KERNEL_BACKEND

__version__ = "0.1.0"

__all__ = [
    "BBox",
    "Correspondence",
    "CorrespondenceSet",
    "DataFormatError",
    "Image",
    "InvalidInputError",
    "PatchGrid",
    "PatsError",
    "TransportPlan",
    "build_patch_grid",
    "SinkhornConfig",
    "cost_matrix",
    "solve_transport",
    "AreaBackend",
    "DescriptorBackend",
    "describe_patches",
    "estimate_areas",
    "read_desc_file",
    "MatcherConfig",
    "argmax_target",
    "extract_correspondence",
    "flood_region",
    "match_grids",
    "HierarchyConfig",
    "LevelSpec",
    "WindowPair",
    "area_expectation",
    "crop_and_resize",
    "run_hierarchy",
    "scale_factor",
    "subdivide",
    "trim_subpatches",
    "GroundTruthWarp",
    "generate_pair",
    "ground_truth_position",
    "EvalReport",
    "LossConfig",
    "concentration_loss",
    "evaluate",
    "inlier_loss",
    "outlier_loss",
    "split_inlier_outlier",
    "RunConfig",
    "load_config",
    "save_config",
    "KERNEL_BACKEND",
    "__version__",
]
