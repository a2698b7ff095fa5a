"""Reading and writing NIfTI-1 volumes without any imaging library.

The header is a fixed 348-byte record; byte order is detected from its
first field, gzip from the file's first two bytes, and voxels are stored
with x varying fastest, which lands in numpy as (z, y, x).
"""
import gzip
import os
import struct

import numpy as np

from dynimage import Volume3D, read_volume, write_volume
from dynimage.errors import NiftiError
from dynimage.nifti import encode_header, parse_header, read_header
from _phantom import phantom

OUT = os.path.join(os.path.dirname(__file__), "out")
os.makedirs(OUT, exist_ok=True)

vol = phantom(32)
path = os.path.join(OUT, "phantom.nii.gz")
write_volume(vol, path)
hdr = read_header(path)
print("extents (x, y, z):", hdr.shape, "| datatype", hdr.datatype, "| vox_offset", hdr.vox_offset)

back, _ = read_volume(path)
print("round trip bit-exact:", np.array_equal(back.voxels, vol.voxels))

# --- axis order ---------------------------------------------------------------------
# a 2x3x4 (x, y, z) ramp written by hand: value = x + 10*y + 100*z
nx, ny, nz = 2, 3, 4
payload = np.array([x + 10 * y + 100 * z for z in range(nz) for y in range(ny) for x in range(nx)], "<f4")
raw = os.path.join(OUT, "ramp.nii")
with open(raw, "wb") as fh:
    fh.write(encode_header((nx, ny, nz)) + b"\0" * 4 + payload.tobytes())
ramp, _ = read_volume(raw)
print("voxels shape (z, y, x):", ramp.shape, "| voxel[z=3, y=2, x=1] =", ramp.voxels[3, 2, 1])

# --- big-endian files parse the same ---------------------------------------------------
be = encode_header((nx, ny, nz), byteorder=">")
print("big-endian header extents:", parse_header(be).shape, "| sizeof_hdr bytes:", be[:4].hex())

# --- what a broken file looks like -------------------------------------------------------
for label, data in [("truncated", encode_header((4, 4, 4))[:100]),
                    ("two-file magic", encode_header((4, 4, 4), magic=b"ni1\0")),
                    ("complex data", encode_header((4, 4, 4), 32, bitpix=64))]:
    try:
        parse_header(data)
    except NiftiError as exc:
        print(f"{label:15s} -> {type(exc).__name__}: {exc}")
