"""Noise injection, error metrics and run reports."""

from __future__ import annotations

import json
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .grid import ScalarField

__all__ = [
    "NoiseSpec",
    "NoiseWarning",
    "MetricWarning",
    "ReconReport",
    "add_noise",
    "inset_mask",
    "rel_l2",
    "max_err",
    "DEFAULT_INSET",
]

DEFAULT_INSET = 0.8


class NoiseWarning(UserWarning):
    pass


class MetricWarning(UserWarning):
    pass


@dataclass(frozen=True)
class NoiseSpec:
    """Additive noise with ``||noise||_2 = level * ||data||_2``.

    ``model`` is ``"gaussian"`` (default) or ``"uniform"``.
    """

    level: float = 0.0
    seed: int = 0
    model: str = "gaussian"

    def __post_init__(self):
        if not (self.level >= 0 and np.isfinite(self.level)):
            raise ValueError(f"noise level must be >= 0, got {self.level}")
        if self.model not in ("gaussian", "uniform"):
            raise ValueError(f"unknown noise model {self.model!r}")

    def child(self, channel: int) -> "NoiseSpec":
        """Independent, reproducible stream for one of several data channels."""
        ss = np.random.SeedSequence([int(self.seed) & (2**64 - 1), int(channel)])
        return NoiseSpec(self.level, int(ss.generate_state(1, np.uint64)[0]), self.model)


def add_noise(data: ScalarField, spec: NoiseSpec) -> ScalarField:
    if spec.level == 0:
        return data
    norm = np.linalg.norm(data.values)
    if norm == 0:
        warnings.warn("zero data: noise level is relative, nothing added", NoiseWarning, stacklevel=2)
        return data
    rng = np.random.default_rng(int(spec.seed) & (2**64 - 1))
    if spec.model == "gaussian":
        eta = rng.standard_normal(data.values.shape)
    else:
        eta = rng.uniform(-1.0, 1.0, data.values.shape)
    eta *= spec.level * norm / np.linalg.norm(eta)
    return ScalarField(data.grid, data.values + eta)


def inset_mask(grid, inset_radius: float | None) -> np.ndarray:
    """Pixels strictly inside the centered disc; all pixels when radius is None."""
    if inset_radius is None:
        return np.ones((grid.n, grid.n), dtype=bool)
    return grid.disc_mask(inset_radius)


def _pair(a: ScalarField, b: ScalarField, inset_radius):
    if a.grid != b.grid:
        raise ValueError("fields live on different grids")
    m = inset_mask(a.grid, inset_radius)
    return a.values[m], b.values[m]


def rel_l2(a: ScalarField, b: ScalarField, inset_radius: float | None = DEFAULT_INSET) -> float:
    """``||a - b|| / ||b||`` over the inset disc (``b`` is the reference)."""
    x, y = _pair(a, b, inset_radius)
    num = float(np.linalg.norm(x - y))
    den = float(np.linalg.norm(y))
    if den == 0:
        warnings.warn("reference has zero norm; returning absolute error", MetricWarning, stacklevel=2)
        return num
    return num / den


def max_err(a: ScalarField, b: ScalarField, inset_radius: float | None = DEFAULT_INSET) -> float:
    x, y = _pair(a, b, inset_radius)
    return float(np.max(np.abs(x - y))) if x.size else 0.0


@dataclass
class ReconReport:
    """Outcome of one pipeline run.  Serialized as a flat JSON object.

    Keys: ``pipeline`` (int), ``label`` (str), ``geometry`` (dict), ``grid``
    (``{"n", "half_extent"}``), ``noise`` (``{"level", "seed", "model"}``),
    ``rel_l2`` and ``max_err`` (one float per reconstructed component),
    ``inset_radius`` (float, or null for the whole grid), ``seconds`` (float), ``files`` (name -> path),
    ``extra`` (free-form diagnostics such as colormap bounds).
    """

    pipeline: int
    label: str
    geometry: dict
    grid: dict
    noise: dict
    rel_l2: list
    max_err: list
    inset_radius: float | None
    seconds: float
    files: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if any(e < 0 for e in list(self.rel_l2) + list(self.max_err)):
            raise ValueError("error metrics must be non-negative")

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ReconReport":
        return cls(**json.loads(text))

    def save(self, path) -> Path:
        path = Path(path)
        path.write_text(self.to_json() + "\n")
        return path

    @classmethod
    def load(cls, path) -> "ReconReport":
        return cls.from_json(Path(path).read_text())
