"""Shared test fixtures that are plain functions (importable from any test)."""

import numpy as np
from PIL import Image


def make_rose_png(path, n=300):
    """Synthetic flower: five red petals, a green blob, constant blue."""
    y, x = np.mgrid[0:n, 0:n] / (n - 1) * 2 - 1
    r = np.hypot(x, y)
    th = np.arctan2(y, x)
    petal = 0.55 + 0.25 * np.cos(5 * th)
    red = np.clip(1.2 * (petal - r) / 0.15, 0, 1) * 0.9
    green = np.clip(0.8 - np.hypot(x + 0.3, y + 0.5) * 1.2, 0, 1)
    blue = 0.3 * np.ones_like(x)
    img = (np.stack([red, green, blue], -1) * 255).astype(np.uint8)
    Image.fromarray(img).save(path)
    return path


# criterion number -> one PASS/FAIL line, printed by conftest at session end
ACCEPTANCE_LINES = {}
