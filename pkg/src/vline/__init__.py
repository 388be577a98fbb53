"""V-line, first-moment and star transforms of 2D vector fields, with their inversions."""

import os

import numba

# TBB in this image is too old for numba; pick a layer that always works.
numba.config.THREADING_LAYER = os.environ.get("NUMBA_THREADING_LAYER", "workqueue")

from .grid import Grid2D, ScalarField, VectorField, make_grid, perp  # noqa: E402

__all__ = ["Grid2D", "ScalarField", "VectorField", "make_grid", "perp"]
