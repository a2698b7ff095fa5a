"""Shared domain types: volumes, planes, dynamic images.

Arrays are stored slice-major: a volume's voxels have shape
``(depth, height, width)`` so that ``voxels[k]`` is the k-th slice along the
pooling axis. Temporal indices exposed to callers are 1-based (``t = 1..T``);
storage is 0-based.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from .errors import DimensionMismatch, EmptyInput, IndexOutOfRange, NonFiniteValue

__all__ = [
    "PoolMethod",
    "Normalization",
    "ChannelMode",
    "Plane2D",
    "Volume3D",
    "DynamicImage",
    "MultiChannelImage",
    "volume_from_slices",
    "slice_view",
]


class PoolMethod(str, enum.Enum):
    APPROX_RANK_POOL = "ApproxRankPool"
    EXACT_RANK_POOL = "ExactRankPool"
    AVG_POOL = "AvgPool"
    MAX_POOL = "MaxPool"


class Normalization(str, enum.Enum):
    NONE = "None"
    MINMAX01 = "MinMax01"


class ChannelMode(str, enum.Enum):
    SINGLE = "Single"
    REPLICATE3 = "Replicate3"
    SEGMENT3 = "Segment3"


def _frozen_f32(values, ndim: int, what: str) -> np.ndarray:
    arr = np.array(values, dtype=np.float32, copy=True, order="C")
    if arr.ndim != ndim:
        raise DimensionMismatch(f"{what} must be {ndim}-D, got shape {arr.shape}")
    if any(n < 1 for n in arr.shape):
        raise DimensionMismatch(f"{what} extents must be positive, got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise NonFiniteValue(f"{what} contains NaN or Inf")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Plane2D:
    """A single 2D plane of float32 values, shape ``(height, width)``."""

    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen_f32(self.values, 2, "plane"))

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def shape(self) -> Tuple[int, int]:
        return self.values.shape

    def flatten(self) -> np.ndarray:
        return self.values.reshape(-1)


@dataclass(frozen=True, eq=False)
class Volume3D:
    """Dense stack of planes; ``voxels`` has shape ``(depth, height, width)``.

    ``spacing`` is the physical voxel size in mm, ordered (x, y, z), i.e.
    (width, height, depth) axes.
    """

    voxels: np.ndarray
    spacing: Optional[Tuple[float, float, float]] = None

    def __post_init__(self):
        object.__setattr__(self, "voxels", _frozen_f32(self.voxels, 3, "volume"))
        if self.spacing is not None:
            spacing = tuple(float(s) for s in self.spacing)
            if len(spacing) != 3:
                raise DimensionMismatch(f"spacing needs 3 entries, got {len(spacing)}")
            object.__setattr__(self, "spacing", spacing)

    @property
    def depth(self) -> int:
        return self.voxels.shape[0]

    @property
    def height(self) -> int:
        return self.voxels.shape[1]

    @property
    def width(self) -> int:
        return self.voxels.shape[2]

    @property
    def shape(self) -> Tuple[int, int, int]:
        return self.voxels.shape

    @property
    def size(self) -> int:
        return self.voxels.size


@dataclass(frozen=True, eq=False)
class DynamicImage:
    """A pooled plane together with how it was produced."""

    plane: Plane2D
    method: PoolMethod
    depth_used: int
    normalization: Normalization = Normalization.NONE
    channel_mode: ChannelMode = ChannelMode.SINGLE

    def __post_init__(self):
        if self.depth_used < 1:
            raise ValueError(f"depth_used must be positive, got {self.depth_used}")
        if self.normalization is Normalization.MINMAX01:
            v = self.plane.values
            if v.min() < 0.0 or v.max() > 1.0:
                raise ValueError("MinMax01 image has values outside [0, 1]")

    @property
    def values(self) -> np.ndarray:
        return self.plane.values


@dataclass(frozen=True, eq=False)
class MultiChannelImage:
    """Three stacked planes, ``values`` shape ``(3, height, width)``."""

    values: np.ndarray

    def __post_init__(self):
        arr = _frozen_f32(self.values, 3, "multi-channel image")
        if arr.shape[0] != 3:
            raise DimensionMismatch(f"expected exactly 3 channels, got {arr.shape[0]}")
        object.__setattr__(self, "values", arr)

    @property
    def channels(self) -> int:
        return 3

    @property
    def height(self) -> int:
        return self.values.shape[1]

    @property
    def width(self) -> int:
        return self.values.shape[2]

    def interleaved(self) -> np.ndarray:
        """Return the pixels as ``(height, width, 3)`` for image writers."""
        return np.moveaxis(self.values, 0, -1)


def volume_from_slices(slices: Sequence[Plane2D | np.ndarray], spacing=None) -> Volume3D:
    """Stack ordered planes into a volume; slice ``k`` ends up at depth index ``k``."""
    if len(slices) == 0:
        raise EmptyInput("cannot build a volume from zero slices")
    arrays = [s.values if isinstance(s, Plane2D) else np.asarray(s, dtype=np.float32) for s in slices]
    first = arrays[0].shape
    for k, a in enumerate(arrays):
        if a.ndim != 2:
            raise DimensionMismatch(f"slice {k + 1} is not 2-D (shape {a.shape})")
        if a.shape != first:
            raise DimensionMismatch(f"slice {k + 1} has shape {a.shape}, expected {first}")
    return Volume3D(np.stack(arrays, axis=0), spacing=spacing)


def slice_view(v: Volume3D, t: int) -> Plane2D:
    """Return slice ``t`` (1-based) of the volume."""
    if not 1 <= t <= v.depth:
        raise IndexOutOfRange(f"slice index {t} outside 1..{v.depth}")
    return Plane2D(v.voxels[t - 1])
