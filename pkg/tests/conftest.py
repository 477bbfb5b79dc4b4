import numpy as np


def make_chart(height=64, width=128):
    """Deterministic smooth ERP test chart used by CLI fixtures."""
    y, x = np.mgrid[0:height, 0:width]
    lon = 2 * np.pi * (x + 0.5) / width - np.pi
    lat = np.pi / 2 - np.pi * (y + 0.5) / height
    return np.stack([
        0.5 + 0.45 * np.sin(lon) * np.cos(lat),
        0.5 + 0.35 * np.cos(2 * lon) * np.cos(lat) ** 2,
        0.5 + 0.45 * np.sin(lat),
    ], axis=2)
