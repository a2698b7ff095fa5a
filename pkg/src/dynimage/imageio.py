"""Writing and reading pooled images: 8/16-bit PNG and raw float32 planes."""
from __future__ import annotations

import json
import os
from pathlib import Path
from typing import Union

import numpy as np
import png

from .core import DynamicImage, MultiChannelImage

__all__ = [
    "FORMATS",
    "EXTENSIONS",
    "quantize",
    "image_array",
    "write_png",
    "read_png",
    "write_raw_f32",
    "read_raw_f32",
    "write_image",
    "read_image_array",
]

FORMATS = ("png8", "png16", "raw-f32")
EXTENSIONS = {"png8": ".png", "png16": ".png", "raw-f32": ".f32"}

ImageLike = Union[DynamicImage, MultiChannelImage, np.ndarray]


def quantize(values: np.ndarray, bitdepth: int) -> np.ndarray:
    """Map normalised values in ``[0, 1]`` to integers, rounding half away from zero."""
    v = np.asarray(values, dtype=np.float64)
    if v.size and (v.min() < 0.0 or v.max() > 1.0):
        raise ValueError("quantize expects values in [0, 1]; normalise first")
    maxval = (1 << bitdepth) - 1
    # inputs are non-negative, so floor(x + 0.5) is half-away-from-zero
    q = np.floor(v * maxval + 0.5)
    return q.astype(np.uint16 if bitdepth > 8 else np.uint8)


def image_array(img: ImageLike) -> np.ndarray:
    """``(H, W)`` for single-plane images, ``(3, H, W)`` for three-channel ones."""
    if isinstance(img, (DynamicImage, MultiChannelImage)):
        return img.values
    return np.asarray(img)


def write_png(path, values: np.ndarray, bitdepth: int) -> None:
    """Write an ``(H, W)`` grey or ``(3, H, W)`` RGB array of values in ``[0, 1]``."""
    if bitdepth not in (8, 16):
        raise ValueError(f"bitdepth must be 8 or 16, got {bitdepth}")
    q = quantize(values, bitdepth)
    if q.ndim == 2:
        h, w = q.shape
        rows, grey = q, True
    elif q.ndim == 3 and q.shape[0] == 3:
        _, h, w = q.shape
        rows, grey = np.moveaxis(q, 0, -1).reshape(h, w * 3), False
    else:
        raise ValueError(f"cannot write array of shape {q.shape} as PNG")
    writer = png.Writer(width=w, height=h, greyscale=grey, bitdepth=bitdepth)
    with open(path, "wb") as fh:
        writer.write(fh, rows.tolist())


def read_png(path) -> np.ndarray:
    """Read a PNG back as integers: ``(H, W)`` grey or ``(3, H, W)`` colour."""
    w, h, rows, info = png.Reader(filename=str(path)).read()
    planes = info["planes"]
    arr = np.vstack([np.asarray(r, dtype=np.uint32) for r in rows]).reshape(h, w, planes)
    if info.get("alpha"):
        arr = arr[..., :-1]
        planes -= 1
    if planes == 1:
        return arr[..., 0]
    return np.moveaxis(arr, -1, 0)


def _sidecar(path) -> Path:
    return Path(str(path) + ".json")


def write_raw_f32(path, values: np.ndarray) -> None:
    """Little-endian float32 C-order dump plus a ``<path>.json`` shape sidecar."""
    arr = np.ascontiguousarray(values, dtype="<f4")
    with open(path, "wb") as fh:
        fh.write(arr.tobytes())
    axes = ["height", "width"] if arr.ndim == 2 else ["channel", "height", "width"]
    meta = {"dtype": "float32", "byteorder": "little", "order": "C", "shape": list(arr.shape), "axes": axes}
    _sidecar(path).write_text(json.dumps(meta, sort_keys=True) + "\n")


def read_raw_f32(path) -> np.ndarray:
    meta = json.loads(_sidecar(path).read_text())
    data = np.fromfile(path, dtype="<f4")
    expected = int(np.prod(meta["shape"]))
    if data.size != expected:
        raise ValueError(f"{path}: {data.size} floats on disk, sidecar shape {meta['shape']} needs {expected}")
    return data.reshape(meta["shape"])


def write_image(path, img: ImageLike, fmt: str) -> None:
    values = image_array(img)
    if fmt == "png8":
        write_png(path, values, 8)
    elif fmt == "png16":
        write_png(path, values, 16)
    elif fmt == "raw-f32":
        write_raw_f32(path, values)
    else:
        raise ValueError(f"unknown output format {fmt!r}; expected one of {FORMATS}")


def read_image_array(path) -> np.ndarray:
    """Load any supported image or volume file as a float64 array."""
    name = os.fspath(path)
    if name.endswith(".png"):
        return read_png(path).astype(np.float64)
    if name.endswith(".f32"):
        return read_raw_f32(path).astype(np.float64)
    if name.endswith((".nii", ".nii.gz")):
        from .nifti import read_volume

        return read_volume(path)[0].voxels.astype(np.float64)
    raise ValueError(f"unrecognised image type: {name}")
