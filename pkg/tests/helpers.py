import numpy as np

from dynimage.core import Volume3D


def two_slice_volume():
    """Slices [all-1, all-3] on a 2x2 grid."""
    return Volume3D(np.stack([np.ones((2, 2)), np.full((2, 2), 3.0)]))


def random_volume(rng, shape=(16, 8, 8), lo=-100.0, hi=100.0):
    return Volume3D(rng.uniform(lo, hi, size=shape).astype(np.float32))
