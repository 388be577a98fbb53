"""Test vector fields: the three benchmark phantoms, a compactly supported
bump potential for potential/solenoidal experiments, and RGB image ingest."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np
from PIL import Image

from .grid import Grid2D, ScalarField, VectorField

__all__ = [
    "DiscSpec",
    "PHANTOM3_F1",
    "PHANTOM3_F2",
    "Potential",
    "bump_potential",
    "constant_potential",
    "phantom1",
    "phantom2",
    "phantom3",
    "phantom",
    "gradient_field",
    "perp_gradient_field",
    "truncate_to_disc",
    "field_from_rgb_image",
]


@dataclass(frozen=True)
class DiscSpec:
    r: float
    cx: float
    cy: float
    w: float

    def __post_init__(self):
        if not self.r > 0:
            raise ValueError(f"disc radius must be positive, got {self.r}")

    def indicator(self, x, y):
        return ((x - self.cx) ** 2 + (y - self.cy) ** 2 < self.r**2).astype(np.float64)


PHANTOM3_F1 = (
    DiscSpec(0.25, 0.1, 0.3, 0.3),
    DiscSpec(0.35, 0.0, -0.1, 0.9),
    DiscSpec(0.3, -0.2, 0.3, 0.7),
)
PHANTOM3_F2 = (
    DiscSpec(0.3, 0.2, 0.1, 0.25),
    DiscSpec(0.2, 0.4, 0.3, 0.45),
    DiscSpec(0.2, -0.3, 0.4, 0.9),
)


def _bump(x, y, cx, cy, a):
    """``exp(-a / (a - rho^2))`` inside ``rho^2 < a``, zero outside."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    rho2 = (x - cx) ** 2 + (y - cy) ** 2
    inside = rho2 < a
    den = np.where(inside, a - rho2, 1.0)
    return np.where(inside, np.exp(-a / den), 0.0)


def phantom1_fn(x, y):
    return (
        1.0 + np.sin(np.pi * x) * np.cos(np.pi * y),
        1.0 + np.sin(np.pi * y) * np.cos(np.pi * x),
    )


def phantom2_fn(x, y):
    return _bump(x, y, 0.15, 0.15, 0.4), _bump(x, y, 0.0, 0.3, 0.3)


def phantom3_fn(x, y):
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    f1 = sum(d.w * d.indicator(x, y) for d in PHANTOM3_F1)
    f2 = sum(d.w * d.indicator(x, y) for d in PHANTOM3_F2)
    return f1, f2


def _sample(grid: Grid2D, fn) -> VectorField:
    X, Y = grid.mesh
    a1, a2 = fn(X, Y)
    return VectorField.from_arrays(grid, np.broadcast_to(a1, X.shape), np.broadcast_to(a2, X.shape))


def phantom1(grid: Grid2D) -> VectorField:
    return _sample(grid, phantom1_fn)


def phantom2(grid: Grid2D) -> VectorField:
    return _sample(grid, phantom2_fn)


def phantom3(grid: Grid2D) -> VectorField:
    return _sample(grid, phantom3_fn)


_PHANTOMS = {1: phantom1, 2: phantom2, 3: phantom3}


def phantom(pid: int, grid: Grid2D) -> VectorField:
    try:
        return _PHANTOMS[int(pid)](grid)
    except KeyError:
        raise ValueError(f"unknown phantom id {pid!r}; choose from {sorted(_PHANTOMS)}") from None


@dataclass(frozen=True)
class Potential:
    """Scalar function with analytic first partials, all vectorized over (x, y)."""

    value: Callable
    dx: Callable
    dy: Callable
    support_radius: float = np.inf

    def sample(self, grid: Grid2D) -> ScalarField:
        X, Y = grid.mesh
        return ScalarField(grid, np.broadcast_to(self.value(X, Y), X.shape))


def bump_potential(a: float = 0.3) -> Potential:
    """``W(x, y) = exp(-a / (a - x^2 - y^2))`` for ``x^2 + y^2 < a``, else 0.

    Default ``a = 0.3`` puts the support inside radius ~0.548.
    """

    def value(x, y):
        return _bump(x, y, 0.0, 0.0, a)

    def _dr(x, y):
        rho2 = np.asarray(x) ** 2 + np.asarray(y) ** 2
        inside = rho2 < a
        den = np.where(inside, a - rho2, 1.0)
        # d/dx exp(-a/(a - rho^2)) = -2 a x W / (a - rho^2)^2
        return np.where(inside, -2.0 * a * value(x, y) / den**2, 0.0)

    return Potential(
        value=value,
        dx=lambda x, y: _dr(x, y) * x,
        dy=lambda x, y: _dr(x, y) * y,
        support_radius=float(np.sqrt(a)),
    )


def constant_potential(c: float = 1.0) -> Potential:
    zero = lambda x, y: np.zeros(np.broadcast(x, y).shape)
    return Potential(value=lambda x, y: c + zero(x, y), dx=zero, dy=zero)


def gradient_field(W: Potential, grid: Grid2D) -> VectorField:
    """``grad W`` sampled from the analytic partials."""
    X, Y = grid.mesh
    return VectorField.from_arrays(
        grid, np.broadcast_to(W.dx(X, Y), X.shape), np.broadcast_to(W.dy(X, Y), X.shape)
    )


def perp_gradient_field(W: Potential, grid: Grid2D) -> VectorField:
    """``(-dW/dy, dW/dx)`` sampled from the analytic partials."""
    X, Y = grid.mesh
    return VectorField.from_arrays(
        grid, -np.broadcast_to(W.dy(X, Y), X.shape), np.broadcast_to(W.dx(X, Y), X.shape)
    )


def truncate_to_disc(f: VectorField, radius: float) -> VectorField:
    grid = f.grid
    if not 0 < radius:
        raise ValueError(f"truncation radius must be positive, got {radius}")
    mask = grid.disc_mask(radius)
    return VectorField(f.f1 * mask, f.f2 * mask)


def field_from_rgb_image(path, size: int | None = None) -> VectorField:
    """Red channel -> ``f1``, green -> ``f2`` (both scaled to [0, 1]); blue is dropped.

    The image spans ``[-1, 1]^2`` with its top row at ``y = 1``.  ``size``
    resamples a square image to ``size x size`` pixels first.
    """
    path = Path(path)
    try:
        with Image.open(path) as im:
            im = im.convert("RGB")
            if size is not None and im.size != (size, size) and im.size[0] == im.size[1]:
                im = im.resize((size, size), Image.Resampling.BILINEAR)
            rgb = np.asarray(im, dtype=np.float64)
    except (OSError, ValueError) as exc:
        raise ValueError(f"cannot read image {path}: {exc}") from exc
    rows, cols = rgb.shape[:2]
    if rows != cols:
        raise ValueError(f"image {path} is {cols}x{rows}; only square images are supported")
    grid = Grid2D(rows, 1.0)
    r = rgb[::-1, :, 0].T / 255.0
    g = rgb[::-1, :, 1].T / 255.0
    return VectorField.from_arrays(grid, r, g)
