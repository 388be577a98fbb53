"""Finite-difference derivatives and the curl/div identities for V-line data.

All derivatives share one stencil: second-order central differences inside,
first-order one-sided differences on the outermost rows and columns.  Along
lattice directions (multiples of 45 degrees) ``lattice_derivative`` differences
along the pixel diagonal instead, which keeps pixels on one diagonal coupled
to the same diagonal.
"""

from __future__ import annotations

import numpy as np

from .beam import lattice_step, unit
from .grid import ScalarField, VectorField
from .vlt import VLineGeometry

__all__ = [
    "grad",
    "partial_x",
    "partial_y",
    "directional_derivative",
    "lattice_step",
    "lattice_derivative",
    "vline_derivative",
    "curl_from_lvt",
    "div_from_tvt",
    "curl",
    "div",
]


def grad(field: ScalarField) -> VectorField:
    h = field.grid.h
    gx, gy = np.gradient(field.values, h, h, edge_order=1)
    return VectorField.from_arrays(field.grid, gx, gy)


def partial_x(field: ScalarField) -> ScalarField:
    return grad(field).f1


def partial_y(field: ScalarField) -> ScalarField:
    return grad(field).f2


def directional_derivative(field: ScalarField, d) -> ScalarField:
    """``d . grad(field)`` for a unit vector ``d``."""
    d = unit(d)
    g = grad(field)
    return ScalarField(field.grid, d[0] * g.f1.values + d[1] * g.f2.values)


def lattice_derivative(field: ScalarField, step) -> ScalarField:
    """Derivative along the integer step ``(di, dj)``: central inside, one-sided
    where the step leaves the grid."""
    di, dj = step
    a = field.values
    n = a.shape[0]
    dist = field.grid.h * float(np.hypot(di, dj))
    p = np.pad(a, 1, mode="constant", constant_values=np.nan)
    fwd = p[1 + di : 1 + di + n, 1 + dj : 1 + dj + n]
    bwd = p[1 - di : 1 - di + n, 1 - dj : 1 - dj + n]
    out = (fwd - bwd) / (2 * dist)
    out = np.where(np.isnan(fwd), (a - bwd) / dist, out)
    out = np.where(np.isnan(bwd), (fwd - a) / dist, out)
    # a pixel with neither neighbour (corner of a diagonal) gets zero
    return ScalarField(field.grid, np.nan_to_num(out, nan=0.0))


def vline_derivative(field: ScalarField, d) -> ScalarField:
    """``D_d field``, on the pixel diagonal when ``d`` is a lattice direction."""
    step = lattice_step(d)
    return directional_derivative(field, d) if step is None else lattice_derivative(field, step)


def _duv(field: ScalarField, g: VLineGeometry) -> ScalarField:
    return directional_derivative(directional_derivative(field, g.v), g.u)


def curl_from_lvt(Lf: ScalarField, g: VLineGeometry | None = None) -> ScalarField:
    """``curl f = D_u D_v L f / det(v, u)``."""
    g = g or VLineGeometry()
    return _duv(Lf, g) / g.det_vu


def div_from_tvt(Tf: ScalarField, g: VLineGeometry | None = None) -> ScalarField:
    """``div f = -D_u D_v T f / det(v, u)``."""
    g = g or VLineGeometry()
    return _duv(Tf, g) / (-g.det_vu)


def curl(f: VectorField) -> ScalarField:
    return partial_x(f.f2) - partial_y(f.f1)


def div(f: VectorField) -> ScalarField:
    return partial_x(f.f1) + partial_y(f.f2)
