"""Square pixel grids and the scalar/vector field containers built on them.

Values are stored as ``values[i, j]`` sampled at the pixel center
``(x_i, y_j)``: axis 0 runs along x, axis 1 along y, and index 0 sits at the
minimum coordinate.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np

__all__ = [
    "Grid2D",
    "ScalarField",
    "VectorField",
    "make_grid",
    "sample_scalar",
    "perp",
    "embed",
    "crop",
]


@dataclass(frozen=True)
class Grid2D:
    """Uniform ``n x n`` pixelization of ``[-half_extent, half_extent]^2``."""

    n: int
    half_extent: float = 1.0

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 3:
            raise ValueError(f"grid needs n >= 3 pixels per side, got {self.n!r}")
        if not (self.half_extent > 0 and np.isfinite(self.half_extent)):
            raise ValueError(f"half_extent must be positive, got {self.half_extent!r}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "half_extent", float(self.half_extent))

    @property
    def h(self) -> float:
        return 2.0 * self.half_extent / self.n

    @property
    def lo(self) -> float:
        return -self.half_extent

    @property
    def hi(self) -> float:
        return self.half_extent

    @cached_property
    def centers(self) -> np.ndarray:
        c = -self.half_extent + (np.arange(self.n) + 0.5) * self.h
        c.flags.writeable = False
        return c

    @cached_property
    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        """Pixel-center coordinates ``(X, Y)`` with ``X[i, j] = x_i``."""
        X, Y = np.meshgrid(self.centers, self.centers, indexing="ij")
        X.flags.writeable = False
        Y.flags.writeable = False
        return X, Y

    def to_index(self, p: float) -> float:
        """Continuous index of a world coordinate; pixel centers map to integers."""
        return (p + self.half_extent) / self.h - 0.5

    def to_world(self, i: float) -> float:
        return -self.half_extent + (i + 0.5) * self.h

    def nearest(self, x: float, y: float) -> tuple[int, int]:
        i = int(np.clip(np.floor((x + self.half_extent) / self.h), 0, self.n - 1))
        j = int(np.clip(np.floor((y + self.half_extent) / self.h), 0, self.n - 1))
        return i, j

    def padded(self, factor: float) -> "Grid2D":
        """Grid with the same spacing covering ``factor`` times the extent.

        The extra pixel count is rounded to an even number so the original
        pixel centers stay on the new lattice.
        """
        if factor < 1:
            raise ValueError(f"pad factor must be >= 1, got {factor}")
        extra = int(round(self.n * (factor - 1.0) / 2.0))
        m = self.n + 2 * extra
        return Grid2D(m, self.half_extent * m / self.n)

    def disc_mask(self, radius: float) -> np.ndarray:
        X, Y = self.mesh
        return X**2 + Y**2 < radius**2


def make_grid(n: int, half_extent: float = 1.0) -> Grid2D:
    return Grid2D(n, half_extent)


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=np.float64)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class ScalarField:
    grid: Grid2D
    values: np.ndarray

    def __post_init__(self):
        v = _frozen(self.values)
        if v.shape != (self.grid.n, self.grid.n):
            raise ValueError(f"values shape {v.shape} does not match grid n={self.grid.n}")
        if not np.all(np.isfinite(v)):
            raise ValueError("field contains non-finite values")
        object.__setattr__(self, "values", v)

    def _wrap(self, values) -> "ScalarField":
        return ScalarField(self.grid, values)

    def _other(self, other):
        if isinstance(other, ScalarField):
            if other.grid != self.grid:
                raise ValueError("fields live on different grids")
            return other.values
        return other

    def __add__(self, other):
        return self._wrap(self.values + self._other(other))

    __radd__ = __add__

    def __sub__(self, other):
        return self._wrap(self.values - self._other(other))

    def __rsub__(self, other):
        return self._wrap(self._other(other) - self.values)

    def __mul__(self, other):
        return self._wrap(self.values * self._other(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self._wrap(self.values / self._other(other))

    def __neg__(self):
        return self._wrap(-self.values)

    @classmethod
    def zeros(cls, grid: Grid2D) -> "ScalarField":
        return cls(grid, np.zeros((grid.n, grid.n)))


@dataclass(frozen=True, eq=False)
class VectorField:
    f1: ScalarField
    f2: ScalarField

    def __post_init__(self):
        if self.f1.grid != self.f2.grid:
            raise ValueError("vector components must share one grid")

    @property
    def grid(self) -> Grid2D:
        return self.f1.grid

    @property
    def components(self) -> tuple[ScalarField, ScalarField]:
        return self.f1, self.f2

    @classmethod
    def from_arrays(cls, grid: Grid2D, a1, a2) -> "VectorField":
        return cls(ScalarField(grid, a1), ScalarField(grid, a2))

    def dot(self, d) -> ScalarField:
        """Pointwise projection ``f . d`` onto a fixed direction."""
        return ScalarField(self.grid, d[0] * self.f1.values + d[1] * self.f2.values)

    def __add__(self, other: "VectorField") -> "VectorField":
        return VectorField(self.f1 + other.f1, self.f2 + other.f2)

    def __sub__(self, other: "VectorField") -> "VectorField":
        return VectorField(self.f1 - other.f1, self.f2 - other.f2)

    def __mul__(self, a: float) -> "VectorField":
        return VectorField(self.f1 * a, self.f2 * a)

    __rmul__ = __mul__

    def __neg__(self) -> "VectorField":
        return VectorField(-self.f1, -self.f2)


def sample_scalar(grid: Grid2D, fn: Callable[[float, float], float]) -> ScalarField:
    """Evaluate ``fn(x, y)`` at every pixel center.

    ``fn`` is first tried on the full coordinate arrays; scalar-only
    callables fall back to a per-pixel loop.
    """
    X, Y = grid.mesh
    try:
        vals = np.broadcast_to(np.asarray(fn(X, Y), dtype=np.float64), X.shape).copy()
    except (TypeError, ValueError):
        vals = np.empty(X.shape)
        for i in range(grid.n):
            for j in range(grid.n):
                vals[i, j] = fn(float(X[i, j]), float(Y[i, j]))
    bad = np.argwhere(~np.isfinite(vals))
    if len(bad):
        i, j = bad[0]
        raise ValueError(
            f"non-finite value {vals[i, j]} at pixel ({i}, {j}) = ({X[i, j]:.6g}, {Y[i, j]:.6g})"
        )
    return ScalarField(grid, vals)


def perp(field: VectorField) -> VectorField:
    """Rotate every vector by +90 degrees: ``(f1, f2) -> (-f2, f1)``."""
    return VectorField(-field.f2, field.f1)


def _offset(small: Grid2D, big: Grid2D) -> int:
    if not np.isclose(small.h, big.h, rtol=1e-12, atol=0):
        raise ValueError("grids have different spacing")
    extra = big.n - small.n
    if extra < 0 or extra % 2:
        raise ValueError(f"cannot align a {small.n}-grid inside a {big.n}-grid")
    return extra // 2


def embed(field, big: Grid2D):
    """Zero-extend a scalar or vector field onto a larger concentric grid."""
    if isinstance(field, VectorField):
        return VectorField(embed(field.f1, big), embed(field.f2, big))
    k = _offset(field.grid, big)
    out = np.zeros((big.n, big.n))
    out[k : k + field.grid.n, k : k + field.grid.n] = field.values
    return ScalarField(big, out)


def crop(field, small: Grid2D):
    """Restrict a field on a padded grid back to the concentric ``small`` grid."""
    if isinstance(field, VectorField):
        return VectorField(crop(field.f1, small), crop(field.f2, small))
    k = _offset(small, field.grid)
    return ScalarField(small, field.values[k : k + small.n, k : k + small.n])
