"""Synthetic head-like volume shared by the demos (no real scans needed)."""
import numpy as np

from dynimage import Volume3D


def phantom(n=64, seed=0):
    """Nested ellipsoids whose brightness drifts with depth, plus mild noise."""
    r = np.random.default_rng(seed)
    z, y, x = np.meshgrid(*(np.linspace(-1, 1, n),) * 3, indexing="ij")
    skull = (x / 0.9) ** 2 + (y / 0.8) ** 2 + (z / 0.85) ** 2 <= 1
    brain = (x / 0.75) ** 2 + (y / 0.65) ** 2 + (z / 0.7) ** 2 <= 1
    ventricles = ((x - 0.15) / 0.12) ** 2 + (y / 0.3) ** 2 + (z / 0.25) ** 2 <= 1
    vol = 0.3 * skull + 0.5 * brain * (1.0 + 0.4 * z) - 0.4 * ventricles
    vol += r.normal(scale=0.02, size=vol.shape)
    return Volume3D(vol.astype(np.float32), spacing=(1.0, 1.0, 1.0))
