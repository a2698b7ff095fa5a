"""Single-file NIfTI-1 reader and minimal float32 writer.

Supported: magic ``n+1``, rank 3 (or rank 4 with a singleton 4th axis),
datatypes uint8, int16, int32, float32, float64, either byte order, plain or
gzip-compressed. Orientation fields are decoded but not applied; the depth
axis of the resulting :class:`~dynimage.core.Volume3D` is always the file's
third dimension.
"""
from __future__ import annotations

import gzip
import struct
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .core import Volume3D
from .errors import (
    BadMagic,
    InvalidHeader,
    NiftiIOError,
    NonFiniteVoxel,
    SizeMismatch,
    TruncatedHeader,
    UnsupportedDatatype,
    UnsupportedRank,
)

__all__ = [
    "HEADER_SIZE",
    "DATATYPES",
    "NiftiHeader",
    "parse_header",
    "encode_header",
    "load_bytes",
    "read_header",
    "decode_volume",
    "read_volume",
    "write_volume",
]

HEADER_SIZE = 348

# (struct code, field name) in file order; per nifti1.h
_FIELDS = [
    ("i", "sizeof_hdr"),
    ("10s", "data_type"),
    ("18s", "db_name"),
    ("i", "extents"),
    ("h", "session_error"),
    ("b", "regular"),
    ("b", "dim_info"),
    ("8h", "dim"),
    ("f", "intent_p1"),
    ("f", "intent_p2"),
    ("f", "intent_p3"),
    ("h", "intent_code"),
    ("h", "datatype"),
    ("h", "bitpix"),
    ("h", "slice_start"),
    ("8f", "pixdim"),
    ("f", "vox_offset"),
    ("f", "scl_slope"),
    ("f", "scl_inter"),
    ("h", "slice_end"),
    ("b", "slice_code"),
    ("b", "xyzt_units"),
    ("f", "cal_max"),
    ("f", "cal_min"),
    ("f", "slice_duration"),
    ("f", "toffset"),
    ("i", "glmax"),
    ("i", "glmin"),
    ("80s", "descrip"),
    ("24s", "aux_file"),
    ("h", "qform_code"),
    ("h", "sform_code"),
    ("f", "quatern_b"),
    ("f", "quatern_c"),
    ("f", "quatern_d"),
    ("f", "qoffset_x"),
    ("f", "qoffset_y"),
    ("f", "qoffset_z"),
    ("4f", "srow_x"),
    ("4f", "srow_y"),
    ("4f", "srow_z"),
    ("16s", "intent_name"),
    ("4s", "magic"),
]
_FORMAT = "".join(code for code, _ in _FIELDS)
assert struct.calcsize("<" + _FORMAT) == HEADER_SIZE

# datatype code -> (numpy kind, bits per voxel)
DATATYPES = {
    2: ("u1", 8),
    4: ("i2", 16),
    8: ("i4", 32),
    16: ("f4", 32),
    64: ("f8", 64),
}

MAGIC_SINGLE = b"n+1\x00"
MAGIC_PAIR = b"ni1\x00"


@dataclass(frozen=True)
class NiftiHeader:
    """The decoded header fields that govern volume extraction."""

    sizeof_hdr: int
    dim: Tuple[int, ...]
    datatype: int
    bitpix: int
    pixdim: Tuple[float, ...]
    vox_offset: float
    scl_slope: float
    scl_inter: float
    magic: bytes
    byteorder: str  # "<" or ">"
    qform_code: int = 0
    sform_code: int = 0
    descrip: str = ""

    @property
    def shape(self) -> Tuple[int, int, int]:
        """Spatial extents ``(nx, ny, nz)``."""
        return tuple(self.dim[1:4])

    @property
    def dtype(self) -> np.dtype:
        return np.dtype(self.byteorder + DATATYPES[self.datatype][0])

    @property
    def spacing(self) -> Tuple[float, float, float]:
        return tuple(self.pixdim[1:4])

    @property
    def data_offset(self) -> int:
        return int(self.vox_offset)

    def scaling(self) -> Tuple[float, float]:
        """``(slope, intercept)`` to apply; a zero slope means no scaling."""
        if self.scl_slope == 0.0:
            return 1.0, 0.0
        return self.scl_slope, self.scl_inter


def _detect_byteorder(buf: bytes) -> str:
    for order in ("<", ">"):
        if struct.unpack_from(order + "i", buf, 0)[0] == HEADER_SIZE:
            return order
    raise BadMagic("sizeof_hdr is not 348 in either byte order; not a NIfTI-1 header")


def parse_header(buf: bytes) -> NiftiHeader:
    """Decode and validate a NIfTI-1 header from the first 348 bytes of ``buf``."""
    if len(buf) < HEADER_SIZE:
        raise TruncatedHeader(f"header needs {HEADER_SIZE} bytes, got {len(buf)}")
    order = _detect_byteorder(buf)
    raw = struct.unpack_from(order + _FORMAT, buf, 0)
    values, i = {}, 0
    for code, name in _FIELDS:
        count = int(code[:-1]) if code[:-1] and code[-1] != "s" else 1
        values[name] = raw[i] if count == 1 else tuple(raw[i:i + count])
        i += count

    magic = values["magic"]
    if magic == MAGIC_PAIR:
        raise BadMagic("two-file (.hdr/.img) NIfTI is not supported")
    if magic != MAGIC_SINGLE:
        raise BadMagic(f"unrecognised magic {magic!r}")

    datatype, bitpix = values["datatype"], values["bitpix"]
    if datatype not in DATATYPES:
        raise UnsupportedDatatype(f"datatype code {datatype} is not supported")
    if bitpix != DATATYPES[datatype][1]:
        raise UnsupportedDatatype(f"bitpix {bitpix} inconsistent with datatype {datatype}")

    dim = values["dim"]
    rank = dim[0]
    if rank not in (3, 4):
        raise UnsupportedRank(f"dim[0] = {rank}; only 3-D volumes are supported")
    if rank == 4 and dim[4] > 1:
        raise UnsupportedRank(f"4-D volume with {dim[4]} time points; only singleton time is supported")
    if min(dim[1:4]) < 1:
        raise InvalidHeader(f"non-positive spatial extent in dim {dim[1:4]}")

    vox_offset = values["vox_offset"]
    if not vox_offset >= HEADER_SIZE:
        raise InvalidHeader(f"vox_offset {vox_offset} lies inside the header")

    return NiftiHeader(
        sizeof_hdr=values["sizeof_hdr"],
        dim=dim,
        datatype=datatype,
        bitpix=bitpix,
        pixdim=values["pixdim"],
        vox_offset=vox_offset,
        scl_slope=values["scl_slope"],
        scl_inter=values["scl_inter"],
        magic=magic,
        byteorder=order,
        qform_code=values["qform_code"],
        sform_code=values["sform_code"],
        descrip=values["descrip"].split(b"\x00", 1)[0].decode("latin-1"),
    )


def encode_header(
    shape: Tuple[int, int, int],
    datatype: int = 16,
    spacing: Optional[Tuple[float, float, float]] = None,
    byteorder: str = "<",
    *,
    vox_offset: float = 352.0,
    scl_slope: float = 1.0,
    scl_inter: float = 0.0,
    magic: bytes = MAGIC_SINGLE,
    dim: Optional[Tuple[int, ...]] = None,
    bitpix: Optional[int] = None,
    descrip: bytes = b"",
) -> bytes:
    """Pack a 348-byte header. Keyword overrides exist to craft malformed fixtures."""
    nx, ny, nz = shape
    if dim is None:
        dim = (3, nx, ny, nz, 1, 1, 1, 1)
    if bitpix is None:
        bitpix = DATATYPES.get(datatype, ("", 0))[1]
    sx, sy, sz = spacing if spacing is not None else (1.0, 1.0, 1.0)
    fields = {name: 0 for _, name in _FIELDS}
    for code, name in _FIELDS:
        if code.endswith("s"):
            fields[name] = b""
        elif code[:-1]:
            fields[name] = (0,) * int(code[:-1])
    fields.update(
        sizeof_hdr=HEADER_SIZE,
        regular=ord("r"),
        dim=tuple(dim),
        datatype=datatype,
        bitpix=bitpix,
        pixdim=(1.0, sx, sy, sz, 0.0, 0.0, 0.0, 0.0),
        vox_offset=vox_offset,
        scl_slope=scl_slope,
        scl_inter=scl_inter,
        xyzt_units=2,  # millimetres
        descrip=descrip,
        magic=magic,
    )
    flat = []
    for code, name in _FIELDS:
        v = fields[name]
        flat.extend(v if isinstance(v, tuple) else (v,))
    return struct.pack(byteorder + _FORMAT, *flat)


def load_bytes(path) -> bytes:
    """Read a file, transparently gunzipping when it starts with the gzip magic."""
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise NiftiIOError(f"cannot read {path}: {exc}") from exc
    if data[:2] == b"\x1f\x8b":
        try:
            data = gzip.decompress(data)
        except (OSError, EOFError) as exc:
            raise NiftiIOError(f"corrupt gzip stream in {path}: {exc}") from exc
    return data


def read_header(path) -> NiftiHeader:
    return parse_header(load_bytes(path))


def decode_volume(data: bytes) -> Tuple[Volume3D, NiftiHeader]:
    hdr = parse_header(data)
    nx, ny, nz = hdr.shape
    count = nx * ny * nz
    start = hdr.data_offset
    needed = count * hdr.dtype.itemsize
    if len(data) < start + needed:
        raise SizeMismatch(
            f"payload has {max(len(data) - start, 0)} bytes, dims {nx}x{ny}x{nz} need {needed}"
        )
    raw = np.frombuffer(data, dtype=hdr.dtype, count=count, offset=start)
    # file order is x fastest, then y, then z: exactly C order for (z, y, x)
    raw = raw.reshape(nz, ny, nx)
    slope, inter = hdr.scaling()
    if slope == 1.0 and inter == 0.0:
        vox = raw.astype(np.float32)
    else:
        with np.errstate(over="ignore"):
            vox = (slope * raw.astype(np.float64) + inter).astype(np.float32)
    if not np.isfinite(vox).all():
        raise NonFiniteVoxel(f"{int(np.size(vox) - np.isfinite(vox).sum())} voxels are NaN or Inf")
    spacing = tuple(float(s) for s in hdr.spacing)
    return Volume3D(vox, spacing=spacing), hdr


def read_volume(path) -> Tuple[Volume3D, NiftiHeader]:
    """Load a ``.nii`` or ``.nii.gz`` file as a float32 volume plus its header."""
    return decode_volume(load_bytes(path))


def write_volume(v: Volume3D, path, datatype: int = 16) -> None:
    """Write ``v`` as a little-endian single-file NIfTI-1 with float32 voxels.

    Paths ending in ``.gz`` are gzip-compressed.
    """
    if datatype != 16:
        raise UnsupportedDatatype("only float32 (datatype 16) output is supported")
    header = encode_header((v.width, v.height, v.depth), 16, v.spacing, "<")
    payload = header + b"\x00" * 4 + v.voxels.astype("<f4").tobytes()
    if str(path).endswith(".gz"):
        payload = gzip.compress(payload, mtime=0)
    try:
        with open(path, "wb") as fh:
            fh.write(payload)
    except OSError as exc:
        raise NiftiIOError(f"cannot write {path}: {exc}") from exc
