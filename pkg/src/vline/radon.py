"""Parallel-beam Radon transform, radial derivative, filtered backprojection,
and the per-angle 2x2 matrix that turns star data into Radon data.

Convention: ``R h(psi, s)`` integrates ``h`` over the line ``{x : x . psi = s}``
with ``psi = (cos a, sin a)`` for the angle ``a`` in degrees.  Radial samples
are ``s_k = (k - m) h_s``, ``k = 0..2m``, ``m = floor(n / sqrt 2) + 2``, with
``h_s`` one pixel width.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np

from .beam import _accumulate
from .grid import Grid2D, ScalarField
from .vlt import StarGeometry

__all__ = [
    "Sinogram",
    "QMatrix",
    "radial_half_count",
    "default_angles",
    "radon",
    "d_ds",
    "ramp_filter",
    "iradon",
    "q_matrix",
    "singular_angles",
]

EPS_PSI = 1e-6
COND_MAX = 1e8
MIN_ANGLES = 8


def radial_half_count(n: int) -> int:
    return int(math.floor(n / math.sqrt(2))) + 2


def default_angles() -> np.ndarray:
    return np.arange(180, dtype=np.float64)


@dataclass(frozen=True, eq=False)
class Sinogram:
    angles: np.ndarray  # degrees
    h_s: float
    values: np.ndarray  # (num_angles, 2m + 1)
    n: int | None = None  # side of the source image, when known

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64)
        a = np.array(self.angles, dtype=np.float64).ravel()
        if v.ndim != 2 or v.shape[0] != a.size:
            raise ValueError(f"sinogram shape {v.shape} does not match {a.size} angles")
        if v.shape[1] % 2 != 1:
            raise ValueError("sinogram needs an odd number of radial samples")
        if not np.all(np.isfinite(v)):
            raise ValueError("sinogram contains non-finite values")
        v.flags.writeable = False
        a.flags.writeable = False
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "angles", a)

    @property
    def m(self) -> int:
        return self.values.shape[1] // 2

    @property
    def s(self) -> np.ndarray:
        return (np.arange(self.values.shape[1]) - self.m) * self.h_s

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    def with_values(self, values) -> "Sinogram":
        return Sinogram(self.angles, self.h_s, values, self.n)


@numba.njit(cache=True, parallel=True)
def _radon_kernel(field, cos_a, sin_a, s_vals, lo, h, reach):
    n = field.shape[0]
    na = cos_a.shape[0]
    ns = s_vals.shape[0]
    out = np.zeros((na, ns))
    cap = 2 * n + 4
    stack = field.reshape((1, n, n))
    for a in numba.prange(na):
        bi = np.empty(cap, np.int64)
        bj = np.empty(cap, np.int64)
        ba = np.empty(cap)
        bb = np.empty(cap)
        acc = np.empty(1)
        # line direction psi_perp = (-sin, cos); start far behind the foot point
        dx = -sin_a[a]
        dy = cos_a[a]
        for k in range(ns):
            x0 = s_vals[k] * cos_a[a] - reach * dx
            y0 = s_vals[k] * sin_a[a] - reach * dy
            _accumulate(stack, x0, y0, dx, dy, lo, h, n, 0, bi, bj, ba, bb, acc)
            out[a, k] = acc[0]
    return out


def radon(field: ScalarField, angles=None) -> Sinogram:
    """Line integrals of the pixelized image by exact pixel traversal."""
    grid = field.grid
    angles = default_angles() if angles is None else np.asarray(angles, dtype=np.float64)
    m = radial_half_count(grid.n)
    s_vals = (np.arange(2 * m + 1) - m) * grid.h
    rad = np.deg2rad(angles)
    reach = 2.0 * grid.half_extent * math.sqrt(2.0)
    img = np.ascontiguousarray(field.values)
    cos_a, sin_a = np.cos(rad), np.sin(rad)
    vals = _radon_kernel(img, cos_a, sin_a, s_vals, grid.lo, grid.h, reach)
    # Axis-parallel lines may run exactly along pixel edges, where rounding
    # picks either neighbouring column.  Use the mean of both instead.
    axis = np.flatnonzero((np.abs(cos_a) < 1e-12) | (np.abs(sin_a) < 1e-12))
    if axis.size:
        delta = 1e-7 * grid.h
        lo_side = _radon_kernel(img, cos_a[axis], sin_a[axis], s_vals - delta, grid.lo, grid.h, reach)
        hi_side = _radon_kernel(img, cos_a[axis], sin_a[axis], s_vals + delta, grid.lo, grid.h, reach)
        vals[axis] = 0.5 * (lo_side + hi_side)
    return Sinogram(angles, grid.h, vals, grid.n)


def d_ds(sino: Sinogram) -> Sinogram:
    """Radial derivative: central differences inside, one-sided at both ends."""
    return sino.with_values(np.gradient(sino.values, sino.h_s, axis=1, edge_order=1))


def ramp_filter(num_s: int, window: str | None = None) -> np.ndarray:
    """Frequency response of the discrete Ram-Lak filter, length ``next_pow2(2 num_s)``.

    Built from the band-limited spatial kernel (1/4 at 0, -1/(pi k)^2 at odd
    k) so the zero-frequency gain is exact; unit sample spacing.
    """
    size = max(64, 1 << int(math.ceil(math.log2(2 * num_s))))
    k = np.concatenate([np.arange(0, size // 2 + 1), np.arange(size // 2 - 1, 0, -1)])
    kernel = np.zeros(size)
    kernel[0] = 0.25
    odd = k % 2 == 1
    kernel[odd] = -1.0 / (np.pi * k[odd]) ** 2
    resp = np.real(np.fft.fft(kernel))
    if window == "hann":
        nu = np.fft.fftfreq(size)
        resp = resp * 0.5 * (1.0 + np.cos(2.0 * np.pi * nu))
    elif window not in (None, "ramp", "ram-lak"):
        raise ValueError(f"unknown filter window {window!r}")
    return resp


def iradon(sino: Sinogram, grid: Grid2D | None = None, window: str | None = None) -> ScalarField:
    """Filtered backprojection onto ``grid`` (default: the n x n grid implied by ``m``).

    Ramp filtering per angle via zero-padded FFT, then linear interpolation
    in ``s`` during backprojection.  Angles are assumed to cover [0, 180)
    uniformly.
    """
    na, ns = sino.shape
    if na < MIN_ANGLES:
        raise ValueError(f"filtered backprojection needs >= {MIN_ANGLES} angles, got {na}")
    if grid is None:
        n = sino.n or _grid_n_for(sino.m)
        grid = Grid2D(n, n * sino.h_s / 2.0)
    resp = ramp_filter(ns, window)
    size = resp.size
    padded = np.zeros((na, size))
    padded[:, :ns] = sino.values
    filtered = np.real(np.fft.ifft(np.fft.fft(padded, axis=1) * resp, axis=1))[:, :ns]
    filtered /= sino.h_s
    X, Y = grid.mesh
    rad = np.deg2rad(sino.angles)
    idx = np.arange(ns, dtype=np.float64)
    out = np.zeros((grid.n, grid.n))
    for a in range(na):
        t = (X * math.cos(rad[a]) + Y * math.sin(rad[a])) / sino.h_s + sino.m
        out += np.interp(t.ravel(), idx, filtered[a], left=0.0, right=0.0).reshape(X.shape)
    out *= np.pi / na
    return ScalarField(grid, out)


def _grid_n_for(m: int) -> int:
    # largest n with floor(n / sqrt 2) + 2 == m
    n = int(math.floor((m - 1) * math.sqrt(2)))
    while radial_half_count(n) > m:
        n -= 1
    while radial_half_count(n + 1) == m:
        n += 1
    return n


@dataclass(frozen=True)
class QMatrix:
    psi: np.ndarray
    gamma_psi: np.ndarray
    Q: np.ndarray
    singular: bool


def _perp(d):
    return np.array([-d[1], d[0]])


def q_matrix(psi_degrees: float, s: StarGeometry) -> QMatrix:
    """``gamma(psi) = -sum_i c_i g_i / (psi . g_i)`` and ``Q = [gamma; gamma_perp]^-1``."""
    if s.is_symmetric():
        raise ValueError("symmetric star: the transform is not invertible for any angle")
    a = math.radians(psi_degrees)
    psi = np.array([math.cos(a), math.sin(a)])
    dirs = s.directions
    dots = dirs @ psi
    if np.any(np.abs(dots) < EPS_PSI):
        return QMatrix(psi, np.full(2, np.nan), np.full((2, 2), np.nan), True)
    gamma = -np.sum(np.asarray(s.weights)[:, None] * dirs / dots[:, None], axis=0)
    M = np.stack([gamma, _perp(gamma)])
    if not np.all(np.isfinite(M)) or np.linalg.cond(M) > COND_MAX or not np.any(M):
        return QMatrix(psi, gamma, np.full((2, 2), np.nan), True)
    return QMatrix(psi, gamma, np.linalg.inv(M), False)


def singular_angles(s: StarGeometry, angles=None) -> list[float]:
    angles = default_angles() if angles is None else angles
    return [float(a) for a in angles if q_matrix(a, s).singular]
