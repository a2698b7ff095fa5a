"""Collapsing a volume into a dynamic image, slice by slice.

Walks through the pieces: the per-slice coefficients, the prefix means,
the two equivalent pooling routes, normalisation and PNG output.
"""
import os
import warnings

import numpy as np

from dynimage import Strategy, Volume3D, approx_rank_pool, normalize_min_max, pool_coefficients, temporal_averages
from dynimage.imageio import write_png
from _phantom import phantom

OUT = os.path.join(os.path.dirname(__file__), "out")
os.makedirs(OUT, exist_ok=True)

# --- the coefficients ---------------------------------------------------------
# alpha weights each prefix mean; beta weights each raw slice. Both sum to 0,
# which is why a constant volume pools to nothing.
c = pool_coefficients(6)
print("alpha:", c.alpha)                       # [-5 -3 -1  1  3  5]
print("beta :", np.round(c.beta, 4))
print(f"sums : {c.alpha.sum()} {abs(c.beta.sum()):.1e}")

# --- a two-slice toy ------------------------------------------------------------
# slices [1] and [3]: prefix means 1 and 2, alpha = (-1, 1) -> image = 1
toy = Volume3D(np.stack([np.ones((2, 2)), 3 * np.ones((2, 2))]))
print("toy prefix means:", [float(m.values[0, 0]) for m in temporal_averages(toy)])
print("toy dynamic image:\n", approx_rank_pool(toy).values)

# --- a phantom volume -----------------------------------------------------------
vol = phantom(64)
print("volume (depth, height, width):", vol.shape)

single = approx_rank_pool(vol)                          # default: one sweep over slices
two = approx_rank_pool(vol, Strategy.TWO_PASS)          # literal prefix-mean route
print("routes agree to", float(np.abs(single.values - two.values).max()))

# the raw image is signed; normalise before writing 8/16-bit PNGs
img = normalize_min_max(single)
print("normalised range:", img.values.min(), img.values.max())
write_png(os.path.join(OUT, "phantom_dynamic.png"), img.values, 8)

# --- the degenerate case ----------------------------------------------------------
# one slice -> alpha_1 = 0 -> zero image, flagged by a warning rather than an error
with warnings.catch_warnings(record=True) as caught:
    warnings.simplefilter("always")
    flat = approx_rank_pool(Volume3D(np.ones((1, 3, 3))))
print("depth-1 image is zero:", not flat.values.any(), "| warning:", caught[0].category.__name__)
