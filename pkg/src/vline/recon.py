"""Inversion pipelines for the five data sets.

1. ``T f`` (potential field) or ``L f`` (solenoidal field) -> scalar potential
2. ``L f`` and ``T f`` -> full field via two Poisson solves
3. ``L f`` and its first moment ``I f`` -> full field via the signed V-line transform
4. ``T f`` and its first moment ``J f`` -> same, through ``div f``
5. star data -> Radon data of each component -> filtered backprojection
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .beam import beam_maps, xray_map
from .diffops import (
    curl,
    directional_derivative,
    vline_derivative,
    div,
    grad,
)
from .evaluation import inset_mask
from .grid import Grid2D, ScalarField, VectorField
from .poisson import solve_dirichlet
from .radon import d_ds, iradon, q_matrix, radon
from .vlt import StarGeometry, VLineGeometry

__all__ = [
    "PadSpec",
    "recover_potential",
    "recover_solenoidal",
    "recover_from_lvt_tvt",
    "svl_from_lvt_moment",
    "svl_from_tvt_moment",
    "invert_svl",
    "TailWarning",
    "recover_from_lvt_moment",
    "recover_from_tvt_moment",
    "star_to_radon",
    "recover_from_star",
    "field_diagnostics",
    "STENCILS",
]


@dataclass(frozen=True)
class PadSpec:
    """Data-grid padding (same spacing, ``pad_factor`` times the extent) and
    the truncation radius applied to moment-pipeline inputs."""

    pad_factor: float = 1.0
    support_radius: float = 0.9

    def __post_init__(self):
        if self.pad_factor < 1:
            raise ValueError(f"pad_factor must be >= 1, got {self.pad_factor}")
        if not self.support_radius > 0:
            raise ValueError(f"support_radius must be positive, got {self.support_radius}")

    def data_grid(self, grid: Grid2D) -> Grid2D:
        return grid if self.pad_factor == 1 else grid.padded(self.pad_factor)


def _duv(field: ScalarField, g: VLineGeometry) -> ScalarField:
    return directional_derivative(directional_derivative(field, g.u), g.v)


STENCILS = ("lattice", "grid")


def _deriv(stencil: str):
    if stencil == "lattice":
        return vline_derivative
    if stencil == "grid":
        return directional_derivative
    raise ValueError(f"unknown stencil {stencil!r}; expected one of {STENCILS}")


def _duv_lat(field: ScalarField, g: VLineGeometry, stencil: str = "lattice") -> ScalarField:
    d = _deriv(stencil)
    return d(d(field, g.v), g.u)


def _grad_lat(field: ScalarField, g: VLineGeometry, stencil: str = "lattice") -> tuple[np.ndarray, np.ndarray]:
    """``(dx, dy)`` of ``field`` assembled from derivatives along ``u`` and ``v``."""
    d = _deriv(stencil)
    du = d(field, g.u).values
    dv = d(field, g.v).values
    # e = a u + b v  =>  D_e = a D_u + b D_v
    coef = np.linalg.solve(np.column_stack([g.u_vec, g.v_vec]), np.eye(2))
    return coef[0, 0] * du + coef[1, 0] * dv, coef[0, 1] * du + coef[1, 1] * dv


FRAME = 2


def _clear_frame(a: np.ndarray, width: int = FRAME) -> np.ndarray:
    # second differences are unreliable next to the edge, and the field
    # (hence its curl and divergence) vanishes there by assumption
    a = a.copy()
    a[:width] = 0
    a[-width:] = 0
    a[:, :width] = 0
    a[:, -width:] = 0
    return a


def recover_potential(Tf: ScalarField, g: VLineGeometry | None = None) -> ScalarField:
    """``V`` with ``f = grad V`` from ``Laplace V = -D_u D_v T f / det(v, u)``, ``V = 0`` on the edge."""
    g = g or VLineGeometry()
    # solve_dirichlet takes the source of -Laplace
    return solve_dirichlet(_duv(Tf, g) / g.det_vu)


def recover_solenoidal(Lf: ScalarField, g: VLineGeometry | None = None) -> ScalarField:
    """``W`` with ``f = perp-grad W`` from ``Laplace W = D_u D_v L f / det(v, u)``."""
    g = g or VLineGeometry()
    return solve_dirichlet(_duv(Lf, g) / (-g.det_vu))


def recover_from_lvt_tvt(Lf: ScalarField, Tf: ScalarField, g: VLineGeometry | None = None) -> VectorField:
    """Solve for each component from its Laplacian::

        Laplace f1 = -D_v D_u (dx T f + dy L f) / det(v, u)
        Laplace f2 =  D_v D_u (dx L f - dy T f) / det(v, u)
    """
    g = g or VLineGeometry()
    if Lf.grid != Tf.grid:
        raise ValueError("L f and T f must share one grid")
    gL, gT = grad(Lf), grad(Tf)
    lap1 = -_duv(gT.f1 + gL.f2, g) / g.det_vu
    lap2 = _duv(gL.f1 - gT.f2, g) / g.det_vu
    return VectorField(solve_dirichlet(-lap1), solve_dirichlet(-lap2))


def _moment_maps(scalar: ScalarField, g: VLineGeometry):
    (mu,) = beam_maps([scalar], g.u_vec, moment=True)
    (mv,) = beam_maps([scalar], g.v_vec, moment=True)
    return mu.values, mv.values


def svl_from_lvt_moment(
    Lf: ScalarField, If: ScalarField, g: VLineGeometry | None = None, stencil: str = "lattice"
):
    """Signed V-line transforms ``X_u f_k - X_v f_k`` (k = 1, 2) from ``L f`` and ``I f``.

    ``stencil="lattice"`` differentiates along pixel diagonals when ``u`` and
    ``v`` are lattice directions; ``"grid"`` always uses the axis stencil of
    ``grad``.  On pixel-center vertices at 45 degrees the beam data on
    neighbouring diagonals are decoupled, and only the first choice keeps the
    discrete identities exact.
    """
    g = g or VLineGeometry()
    u, v = g.u, g.v
    c = ScalarField(Lf.grid, _clear_frame(_duv_lat(Lf, g, stencil).values / g.det_vu))
    xu, xv = _moment_maps(c, g)
    dx, dy = _grad_lat(If, g, stencil)
    s1 = dx + u[1] * xu - v[1] * xv
    s2 = dy - u[0] * xu + v[0] * xv
    return ScalarField(Lf.grid, s1), ScalarField(Lf.grid, s2)


def svl_from_tvt_moment(
    Tf: ScalarField, Jf: ScalarField, g: VLineGeometry | None = None, stencil: str = "lattice"
):
    """Signed V-line transforms of both components from ``T f`` and ``J f``."""
    g = g or VLineGeometry()
    u, v = g.u, g.v
    d = ScalarField(Tf.grid, _clear_frame(_duv_lat(Tf, g, stencil).values / (-g.det_vu)))
    xu, xv = _moment_maps(d, g)
    dx, dy = _grad_lat(Jf, g, stencil)
    s1 = -dy - u[0] * xu + v[0] * xv
    s2 = dx - u[1] * xu + v[1] * xv
    return ScalarField(Tf.grid, s1), ScalarField(Tf.grid, s2)


class TailWarning(UserWarning):
    pass


def _entry(px, py, d, lo, hi):
    """First parameter ``s >= 0`` where ``p + s d`` lies in the box ``[lo, hi]^2``
    and the index of the entry edge (0 left, 1 right, 2 bottom, 3 top); -1 on a miss."""
    big = np.inf
    s_in = np.zeros_like(px)
    s_out = np.full_like(px, big)
    edge = np.full(px.shape, -1)
    for k, (p, dk) in enumerate(((px, d[0]), (py, d[1]))):
        if abs(dk) < 1e-14:
            inside = (p >= lo) & (p <= hi)
            s_out = np.where(inside, s_out, -1.0)
            continue
        a = (lo - p) / dk
        b = (hi - p) / dk
        near = np.minimum(a, b)
        far = np.maximum(a, b)
        e = 2 * k + (0 if dk > 0 else 1)
        edge = np.where(near > s_in, e, edge)
        s_in = np.maximum(s_in, near)
        s_out = np.minimum(s_out, far)
    hit = s_out >= s_in
    return np.where(hit, s_in, np.nan), np.where(hit, edge, -1)


_NORMALS = np.array([[-1.0, 0.0], [1.0, 0.0], [0.0, -1.0], [0.0, 1.0]])


def _svl_tail(svl: ScalarField, g: VLineGeometry) -> np.ndarray:
    """The part of ``X_w svl`` that lies beyond the grid, per pixel.

    Outside the grid the strip data are constant along each ray until the ray
    enters the support, which lies inside the grid.  So ``X_u f`` and ``X_v f``
    at an outside point equal their values where the ray reaches the outermost
    pixel centers.  On an edge where ``v`` points outward ``X_v f`` vanishes and
    ``X_u f = svl`` there; likewise for ``u``.
    """
    grid = svl.grid
    h = grid.h
    c = grid.centers
    lo, hi = c[0], c[-1]
    vals = svl.values
    edges = [vals[0, :], vals[-1, :], vals[:, 0], vals[:, -1]]
    u, v, w = g.u_vec, g.v_vec, g.w
    # per direction: (edge index) -> sign applied to svl, for the edges where
    # the other ray does not point inward (so it stays clear of the support)
    known = []
    for d, other, sign in ((u, v, 1.0), (v, u, -1.0)):
        known.append({e: sign for e in range(4) if _NORMALS[e] @ other > -1e-12})

    wp = np.array([-w[1], w[0]])
    sig_max = grid.half_extent * math.sqrt(2.0)
    ds = h / 4.0
    sig = np.arange(-math.ceil(sig_max / ds), math.ceil(sig_max / ds) + 1) * ds
    # exit point of each w-line from the grid box
    box_lo, box_hi = grid.lo, grid.hi
    ox, oy = sig * wp[0], sig * wp[1]
    s_back, _ = _entry(ox + 4 * sig_max * w[0], oy + 4 * sig_max * w[1], -w, box_lo, box_hi)
    ok = np.isfinite(s_back)
    ex = np.where(ok, ox + (4 * sig_max - np.nan_to_num(s_back)) * w[0], 0.0)
    ey = np.where(ok, oy + (4 * sig_max - np.nan_to_num(s_back)) * w[1], 0.0)
    sin_min = min(abs(w @ np.array([-u[1], u[0]])), abs(w @ np.array([-v[1], v[0]])))
    length = 2 * sig_max * (1.0 + 1.0 / max(sin_min, 1e-3))
    t = (np.arange(int(math.ceil(length / h))) + 0.5) * h
    qx = ex[:, None] + t[None, :] * w[0]
    qy = ey[:, None] + t[None, :] * w[1]
    total = np.zeros(qx.shape)
    missing = False
    for d, kn, dsign in ((u, known[0], 1.0), (v, known[1], -1.0)):
        s_in, e = _entry(qx, qy, d, lo, hi)
        for k in range(4):
            sel = e == k
            if not np.any(sel):
                continue
            if k not in kn:
                missing = True
                continue
            along = qy[sel] + s_in[sel] * d[1] if k < 2 else qx[sel] + s_in[sel] * d[0]
            total[sel] += dsign * kn[k] * np.interp(along, c, edges[k])
    if missing:
        warnings.warn(
            "strip data beyond the grid are not determined for this geometry; "
            "the outside part of the w-integral is only partly included",
            TailWarning,
            stacklevel=3,
        )
    tail_sig = np.where(ok, h * total.sum(axis=1), 0.0)
    X, Y = grid.mesh
    return np.interp(X * wp[0] + Y * wp[1], sig, tail_sig)


def invert_svl(
    svl: ScalarField, g: VLineGeometry | None = None, tail: bool = True, stencil: str = "lattice"
) -> ScalarField:
    """``h = D_v D_u X_w (X_u h - X_v h) / ||v - u||`` with ``w = (v - u)/||v - u||``.

    ``X_w`` runs past the grid edge; with ``tail`` the outside part is
    recovered from the edge data (support of ``h`` inside the grid).
    """
    g = g or VLineGeometry()
    grid = svl.grid
    # drop the outermost ring, where the data derivatives were one-sided
    inner = Grid2D(grid.n - 2, grid.half_extent - grid.h)
    s = ScalarField(inner, svl.values[1:-1, 1:-1])
    xw = xray_map(s, g.w)
    if tail:
        xw = ScalarField(inner, xw.values + _svl_tail(s, g))
    out = np.zeros((grid.n, grid.n))
    out[1:-1, 1:-1] = _duv_lat(xw, g, stencil).values / g.v_minus_u_norm
    return ScalarField(grid, out)


def _crop_to(field: VectorField, grid: Grid2D | None) -> VectorField:
    from .grid import crop

    return field if grid is None or grid == field.grid else crop(field, grid)


def recover_from_lvt_moment(
    Lf: ScalarField,
    If: ScalarField,
    g: VLineGeometry | None = None,
    out_grid: Grid2D | None = None,
    stencil: str = "lattice",
) -> VectorField:
    """Full field from ``L f`` and ``I f`` given on a (typically padded) data grid.

    ``out_grid`` crops the result to a concentric smaller grid.
    """
    s1, s2 = svl_from_lvt_moment(Lf, If, g, stencil)
    return _crop_to(VectorField(invert_svl(s1, g, stencil=stencil), invert_svl(s2, g, stencil=stencil)), out_grid)


def recover_from_tvt_moment(
    Tf: ScalarField,
    Jf: ScalarField,
    g: VLineGeometry | None = None,
    out_grid: Grid2D | None = None,
    stencil: str = "lattice",
) -> VectorField:
    s1, s2 = svl_from_tvt_moment(Tf, Jf, g, stencil)
    return _crop_to(VectorField(invert_svl(s1, g, stencil=stencil), invert_svl(s2, g, stencil=stencil)), out_grid)


def star_to_radon(S_long: ScalarField, S_trans: ScalarField, s: StarGeometry | None = None, angles=None):
    """Radon data of both field components from star data.

    Rows at angles where ``Q`` is undefined are replaced by the mean of the
    nearest defined rows on either side (cyclically).  Returns
    ``(R f1, R f2, singular_angle_list)``.
    """
    s = s or StarGeometry()
    if s.is_symmetric():
        raise ValueError("symmetric star: the transform is not invertible")
    dl = d_ds(radon(S_long, angles))
    dt = d_ds(radon(S_trans, angles))
    na = dl.shape[0]
    r1 = np.zeros(dl.shape)
    r2 = np.zeros(dl.shape)
    bad = []
    for a, psi in enumerate(dl.angles):
        q = q_matrix(psi, s)
        if q.singular:
            bad.append(a)
            continue
        r1[a] = q.Q[0, 0] * dl.values[a] + q.Q[0, 1] * dt.values[a]
        r2[a] = q.Q[1, 0] * dl.values[a] + q.Q[1, 1] * dt.values[a]
    if len(bad) == na:
        raise ValueError("Q(psi) is undefined at every sampled angle")
    good = [a for a in range(na) if a not in set(bad)]
    for a in bad:
        lo = max((k for k in good if k < a), default=None)
        hi = min((k for k in good if k > a), default=None)
        # wrap around: R(psi + 180, s) = R(psi, -s)
        lo_row = (r1[lo], r2[lo]) if lo is not None else (r1[good[-1]][::-1], r2[good[-1]][::-1])
        hi_row = (r1[hi], r2[hi]) if hi is not None else (r1[good[0]][::-1], r2[good[0]][::-1])
        r1[a] = 0.5 * (lo_row[0] + hi_row[0])
        r2[a] = 0.5 * (lo_row[1] + hi_row[1])
    return dl.with_values(r1), dl.with_values(r2), [float(dl.angles[a]) for a in bad]


def recover_from_star(
    S_long: ScalarField,
    S_trans: ScalarField,
    s: StarGeometry | None = None,
    window: str | None = None,
    angles=None,
) -> VectorField:
    """``R f = Q(psi) d/ds R(S f)`` per angle, then filtered backprojection per component."""
    R1, R2, _ = star_to_radon(S_long, S_trans, s, angles)
    grid = S_long.grid
    return VectorField(iradon(R1, grid, window), iradon(R2, grid, window))


def field_diagnostics(f: VectorField, inset_radius: float | None = 0.8) -> dict:
    """Interior RMS of curl and div, to spot fields that violate a pipeline's hypothesis."""
    m = inset_mask(f.grid, inset_radius)
    c = curl(f).values[m]
    d = div(f).values[m]
    return {
        "curl_rms": float(np.sqrt(np.mean(c**2))) if c.size else 0.0,
        "div_rms": float(np.sqrt(np.mean(d**2))) if d.size else 0.0,
    }
