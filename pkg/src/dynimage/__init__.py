"""Collapse 3D volumes into 2D dynamic images by rank pooling along depth."""
from .core import (
    ChannelMode,
    DynamicImage,
    MultiChannelImage,
    Normalization,
    Plane2D,
    PoolMethod,
    Volume3D,
    slice_view,
    volume_from_slices,
)
from .rankpool import (
    Strategy,
    approx_rank_pool,
    rank_pool_accumulate,
    avg_pool_depth,
    max_pool_depth,
    normalize_min_max,
    pool_coefficients,
    temporal_averages,
    to_three_channel,
)
from .ranksvm import build_problem, objective, scores, solve, subgradient, suggest_step0
from .nifti import read_volume, write_volume

__version__ = "0.1.0"
