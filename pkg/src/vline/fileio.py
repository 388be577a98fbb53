"""Portable field/sinogram files and PNG figure export.

Field file layout::

    VLF1 <n> <half_extent> <ncomp>\\n
    ncomp * n * n little-endian float64, row-major, components concatenated

Sinogram file layout::

    VLS1 <num_angles> <num_s> <h_s>\\n
    num_angles * num_s little-endian float64, row-major
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image, ImageDraw

from .grid import Grid2D, ScalarField, VectorField

__all__ = [
    "write_field",
    "read_field",
    "write_sinogram",
    "read_sinogram",
    "colormap",
    "save_png",
    "save_quiver_png",
    "save_rgb_png",
]

_LE = np.dtype("<f8")


def write_field(path, field) -> Path:
    path = Path(path)
    comps = field.components if isinstance(field, VectorField) else (field,)
    grid = comps[0].grid
    header = f"VLF1 {grid.n} {grid.half_extent!r} {len(comps)}\n".encode("ascii")
    with open(path, "wb") as fh:
        fh.write(header)
        for c in comps:
            fh.write(np.ascontiguousarray(c.values, dtype=_LE).tobytes())
    return path


def read_field(path):
    """Read a field file; returns a ScalarField (1 component) or VectorField (2)."""
    raw = Path(path).read_bytes()
    nl = raw.find(b"\n")
    if nl < 0:
        raise ValueError(f"{path}: missing header line")
    parts = raw[:nl].decode("ascii", errors="replace").split()
    if len(parts) != 4 or parts[0] != "VLF1":
        raise ValueError(f"{path}: not a VLF1 field file")
    n, half, ncomp = int(parts[1]), float(parts[2]), int(parts[3])
    data = np.frombuffer(raw[nl + 1 :], dtype=_LE)
    if data.size != ncomp * n * n:
        raise ValueError(f"{path}: expected {ncomp * n * n} values, found {data.size}")
    grid = Grid2D(n, half)
    comps = [ScalarField(grid, c.reshape(n, n)) for c in data.reshape(ncomp, n * n)]
    if ncomp == 1:
        return comps[0]
    if ncomp == 2:
        return VectorField(*comps)
    raise ValueError(f"{path}: unsupported component count {ncomp}")


def write_sinogram(path, sino) -> Path:
    path = Path(path)
    na, ns = sino.values.shape
    header = f"VLS1 {na} {ns} {sino.h_s!r}\n".encode("ascii")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(sino.values, dtype=_LE).tobytes())
    return path


def read_sinogram(path, angles=None):
    """Read a sinogram file.

    The file does not store the angle list; the default 0..num_angles-1
    degree lattice is assumed unless ``angles`` is given.
    """
    from .radon import Sinogram

    raw = Path(path).read_bytes()
    nl = raw.find(b"\n")
    parts = raw[:nl].decode("ascii", errors="replace").split()
    if len(parts) != 4 or parts[0] != "VLS1":
        raise ValueError(f"{path}: not a VLS1 sinogram file")
    na, ns, h_s = int(parts[1]), int(parts[2]), float(parts[3])
    data = np.frombuffer(raw[nl + 1 :], dtype=_LE)
    if data.size != na * ns:
        raise ValueError(f"{path}: expected {na * ns} values, found {data.size}")
    if angles is None:
        angles = np.arange(na, dtype=float)
    return Sinogram(np.asarray(angles, dtype=float), h_s, data.reshape(na, ns).copy())


# Viridis anchor points, sampled at 0, 1/8, ..., 1.
_RAMP = np.array(
    [
        [68, 1, 84],
        [71, 44, 122],
        [59, 81, 139],
        [44, 113, 142],
        [33, 144, 141],
        [39, 173, 129],
        [92, 200, 99],
        [170, 220, 50],
        [253, 231, 37],
    ],
    dtype=np.float64,
)


def colormap(values: np.ndarray, vmin: float | None = None, vmax: float | None = None):
    """Map values linearly from ``[vmin, vmax]`` onto the fixed ramp.

    Returns ``(rgb_uint8, vmin, vmax)``; bounds default to the data range.
    """
    v = np.asarray(values, dtype=np.float64)
    vmin = float(v.min()) if vmin is None else float(vmin)
    vmax = float(v.max()) if vmax is None else float(vmax)
    span = vmax - vmin
    t = np.zeros_like(v) if span <= 0 else np.clip((v - vmin) / span, 0.0, 1.0)
    pos = t * (len(_RAMP) - 1)
    k = np.minimum(pos.astype(int), len(_RAMP) - 2)
    frac = (pos - k)[..., None]
    rgb = _RAMP[k] * (1 - frac) + _RAMP[k + 1] * frac
    return np.rint(rgb).astype(np.uint8), vmin, vmax


def _display(values: np.ndarray) -> np.ndarray:
    # image rows run top to bottom in decreasing y
    return np.asarray(values).T[::-1]


def save_png(path, field: ScalarField, vmin=None, vmax=None) -> tuple[float, float]:
    """Write a colormapped PNG; returns the bounds used."""
    rgb, lo, hi = colormap(_display(field.values), vmin, vmax)
    Image.fromarray(rgb, mode="RGB").save(path)
    return lo, hi


def save_rgb_png(path, field: VectorField) -> None:
    """Write ``f1`` as red and ``f2`` as green (blue = 0), values clipped to [0, 1]."""
    r = np.rint(np.clip(_display(field.f1.values), 0, 1) * 255)
    g = np.rint(np.clip(_display(field.f2.values), 0, 1) * 255)
    img = np.stack([r, g, np.zeros_like(r)], axis=-1).astype(np.uint8)
    Image.fromarray(img, mode="RGB").save(path)


def save_quiver_png(path, field: VectorField, arrows: int = 20, size: int = 480) -> None:
    """Arrow plot of ``field`` on a coarse ``arrows x arrows`` sub-lattice."""
    grid = field.grid
    img = Image.new("RGB", (size, size), (255, 255, 255))
    draw = ImageDraw.Draw(img)
    step = max(1, grid.n // arrows)
    idx = np.arange(step // 2, grid.n, step)
    u = field.f1.values[np.ix_(idx, idx)]
    v = field.f2.values[np.ix_(idx, idx)]
    peak = float(np.max(np.hypot(u, v)))
    cell = size / len(idx)
    scale = 0.9 * cell / peak if peak > 0 else 0.0
    for a, i in enumerate(idx):
        for b, j in enumerate(idx):
            px = (a + 0.5) * cell
            py = size - (b + 0.5) * cell
            dx, dy = u[a, b] * scale, -v[a, b] * scale
            tip = (px + dx, py + dy)
            draw.line([(px, py), tip], fill=(20, 40, 160), width=1)
            norm = np.hypot(dx, dy)
            if norm > 2:
                ux, uy = dx / norm, dy / norm
                head = min(4.0, 0.35 * norm)
                left = (tip[0] - head * (ux - 0.5 * uy), tip[1] - head * (uy + 0.5 * ux))
                right = (tip[0] - head * (ux + 0.5 * uy), tip[1] - head * (uy - 0.5 * ux))
                draw.polygon([tip, left, right], fill=(20, 40, 160))
    img.save(path)
