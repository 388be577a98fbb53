"""Forward transforms of vector fields built from beam maps of projections.

With ray directions ``u``, ``v``::

    L f  = -X_u(f.u)      + X_v(f.v)          longitudinal
    T f  = -X_u(f.u_perp) + X_v(f.v_perp)     transverse
    I f, J f: the same with first-moment beams X^1

and the star transform ``S f = sum_i c_i X_{g_i}(f.g_i, f.g_i_perp)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .beam import beam_maps, unit
from .grid import ScalarField, VectorField

__all__ = [
    "VLineGeometry",
    "StarGeometry",
    "lvt",
    "tvt",
    "lvt1",
    "tvt1",
    "vline_transforms",
    "star",
]


def _perp(d: np.ndarray) -> np.ndarray:
    return np.array([-d[1], d[0]])


@dataclass(frozen=True)
class VLineGeometry:
    u: tuple = (math.cos(math.pi / 4), math.sin(math.pi / 4))
    v: tuple = (math.cos(3 * math.pi / 4), math.sin(3 * math.pi / 4))

    def __post_init__(self):
        u, v = unit(self.u), unit(self.v)
        if abs(v[0] * u[1] - v[1] * u[0]) <= 1e-12:
            raise ValueError(f"ray directions u={tuple(u)} and v={tuple(v)} are linearly dependent")
        object.__setattr__(self, "u", tuple(u))
        object.__setattr__(self, "v", tuple(v))

    @classmethod
    def from_angles(cls, u_angle: float, v_angle: float) -> "VLineGeometry":
        return cls((math.cos(u_angle), math.sin(u_angle)), (math.cos(v_angle), math.sin(v_angle)))

    @property
    def u_vec(self) -> np.ndarray:
        return np.array(self.u)

    @property
    def v_vec(self) -> np.ndarray:
        return np.array(self.v)

    @property
    def u_perp(self) -> np.ndarray:
        return _perp(self.u_vec)

    @property
    def v_perp(self) -> np.ndarray:
        return _perp(self.v_vec)

    @property
    def det_vu(self) -> float:
        """``det(v, u) = v1 u2 - v2 u1``; equals -1 for the default pair."""
        return self.v[0] * self.u[1] - self.v[1] * self.u[0]

    @property
    def v_minus_u_norm(self) -> float:
        return float(np.linalg.norm(self.v_vec - self.u_vec))

    @property
    def w(self) -> np.ndarray:
        d = self.v_vec - self.u_vec
        return d / np.linalg.norm(d)


@dataclass(frozen=True)
class StarGeometry:
    """Branch directions given by polar angles (radians) and nonzero weights."""

    angles: tuple = (0.0, 2 * math.pi / 3, 4 * math.pi / 3)
    weights: tuple = field(default=None)

    def __post_init__(self):
        angles = tuple(float(a) for a in self.angles)
        weights = (1.0,) * len(angles) if self.weights is None else tuple(float(c) for c in self.weights)
        if not angles:
            raise ValueError("a star needs at least one branch")
        if len(weights) != len(angles):
            raise ValueError(f"{len(angles)} branch angles but {len(weights)} weights")
        if any(c == 0 or not math.isfinite(c) for c in weights):
            raise ValueError(f"star weights must be finite and nonzero, got {weights}")
        object.__setattr__(self, "angles", angles)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def from_directions(cls, directions, weights) -> "StarGeometry":
        angles = tuple(math.atan2(*unit(d)[::-1]) for d in directions)
        return cls(angles, tuple(weights))

    @property
    def m(self) -> int:
        return len(self.angles)

    @property
    def directions(self) -> np.ndarray:
        a = np.asarray(self.angles)
        return np.stack([np.cos(a), np.sin(a)], axis=1)

    def is_symmetric(self, tol: float = 1e-9) -> bool:
        """True iff branches pair up as ``g_i = -g_k`` with ``c_i = -c_k``."""
        if self.m % 2:
            return False
        dirs = self.directions
        free = list(range(self.m))
        while free:
            i = free.pop(0)
            for k in free:
                if (
                    np.allclose(dirs[i], -dirs[k], atol=tol)
                    and abs(self.weights[i] + self.weights[k]) <= tol * max(1.0, abs(self.weights[i]))
                ):
                    free.remove(k)
                    break
            else:
                return False
        return True


def _combine(f: VectorField, g: VLineGeometry, moment: bool, longitudinal: bool, transverse: bool):
    out = {}
    for sign, d in ((-1.0, g.u_vec), (1.0, g.v_vec)):
        proj = []
        if longitudinal:
            proj.append(f.dot(d))
        if transverse:
            proj.append(f.dot(_perp(d)))
        maps = beam_maps(proj, d, moment=moment)
        keys = (["L"] if longitudinal else []) + (["T"] if transverse else [])
        for key, mp in zip(keys, maps):
            out[key] = out.get(key, 0.0) + sign * mp.values
    return out


def vline_transforms(f: VectorField, g: VLineGeometry | None = None, moment: bool = False):
    """Longitudinal and transverse data together (one traversal per direction).

    Returns ``(L f, T f)``, or ``(I f, J f)`` when ``moment`` is set.
    """
    g = g or VLineGeometry()
    out = _combine(f, g, moment, True, True)
    return ScalarField(f.grid, out["L"]), ScalarField(f.grid, out["T"])


def lvt(f: VectorField, g: VLineGeometry | None = None) -> ScalarField:
    return ScalarField(f.grid, _combine(f, g or VLineGeometry(), False, True, False)["L"])


def tvt(f: VectorField, g: VLineGeometry | None = None) -> ScalarField:
    return ScalarField(f.grid, _combine(f, g or VLineGeometry(), False, False, True)["T"])


def lvt1(f: VectorField, g: VLineGeometry | None = None) -> ScalarField:
    return ScalarField(f.grid, _combine(f, g or VLineGeometry(), True, True, False)["L"])


def tvt1(f: VectorField, g: VLineGeometry | None = None) -> ScalarField:
    return ScalarField(f.grid, _combine(f, g or VLineGeometry(), True, False, True)["T"])


def star(f: VectorField, s: StarGeometry | None = None) -> tuple[ScalarField, ScalarField]:
    """Longitudinal and transversal channels of the vector star transform."""
    s = s or StarGeometry()
    n = f.grid.n
    acc_l = np.zeros((n, n))
    acc_t = np.zeros((n, n))
    for c, d in zip(s.weights, s.directions):
        ml, mt = beam_maps([f.dot(d), f.dot(_perp(d))], d)
        acc_l += c * ml.values
        acc_t += c * mt.values
    return ScalarField(f.grid, acc_l), ScalarField(f.grid, acc_t)
