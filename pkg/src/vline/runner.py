"""Run configuration and the end-to-end drivers behind the command line.

A run is fully described by a :class:`RunConfig`; the config is written next
to the outputs as ``config.json`` and can be fed back with ``--config`` to
reproduce every array byte for byte.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .evaluation import DEFAULT_INSET, NoiseSpec, ReconReport, add_noise, max_err, rel_l2
from .fileio import read_field, save_png, save_quiver_png, save_rgb_png, write_field
from .grid import Grid2D, ScalarField, VectorField, crop, embed, make_grid
from .phantom import (
    bump_potential,
    field_from_rgb_image,
    gradient_field,
    perp_gradient_field,
    phantom,
    truncate_to_disc,
)
from .recon import (
    PadSpec,
    STENCILS,
    field_diagnostics,
    recover_from_lvt_moment,
    recover_from_lvt_tvt,
    recover_from_star,
    recover_from_tvt_moment,
    recover_potential,
    recover_solenoidal,
)
from .radon import singular_angles
from .vlt import StarGeometry, VLineGeometry, lvt, lvt1, star, tvt, tvt1, vline_transforms

__all__ = [
    "ConfigError",
    "RunConfig",
    "PIPELINES",
    "TRANSFORMS",
    "default_pad",
    "load_input_field",
    "run_phantom",
    "run_forward",
    "run_pipeline",
    "aggregate_reports",
]

PIPELINES = {
    1: "potential/solenoidal field from T f or L f",
    2: "full field from L f and T f",
    3: "full field from L f and its first moment",
    4: "full field from T f and its first moment",
    5: "full field from the vector star transform",
}
TRANSFORMS = ("lvt", "tvt", "lvt1", "tvt1", "star")
DEFAULT_PHANTOM = {1: None, 2: 2, 3: 1, 4: 1, 5: 2}


class ConfigError(ValueError):
    """Invalid or inconsistent run configuration."""


def default_pad(pipeline: int) -> float:
    # star data are truncated by the data grid; a wider data grid shrinks the
    # resulting error roughly as 1 / pad^2
    return {3: 2.0, 4: 2.0, 5: 3.0}.get(pipeline, 1.0)


@dataclass
class RunConfig:
    command: str = "pipeline"
    phantom: int | None = None
    input: str | None = None
    image: str | None = None
    n: int = 128
    half_extent: float = 1.0
    u_angle: float = 45.0  # degrees
    v_angle: float = 135.0
    star_angles: list = field(default_factory=lambda: [0.0, 120.0, 240.0])
    star_weights: list | None = None
    pipeline: int | None = None
    variant: str = "potential"  # pipeline 1: recover V from T f, or W from L f
    transforms: list = field(default_factory=lambda: ["lvt", "tvt"])
    noise_level: float = 0.0
    seed: int = 0
    noise_model: str = "gaussian"
    pad_factor: float | None = None
    support_radius: float = 0.9
    stencil: str = "lattice"
    window: str | None = None
    inset_radius: float = DEFAULT_INSET
    out: str = "out"

    def validate(self) -> "RunConfig":
        if self.command not in ("phantom", "forward", "pipeline"):
            raise ConfigError(f"unknown command {self.command!r}")
        if not isinstance(self.n, int) or self.n < 4:
            raise ConfigError(f"n must be an integer >= 4, got {self.n!r}")
        if not self.half_extent > 0:
            raise ConfigError(f"half_extent must be positive, got {self.half_extent}")
        if self.phantom is not None and self.phantom not in (1, 2, 3):
            raise ConfigError(f"unknown phantom id {self.phantom!r}; choose 1, 2 or 3")
        if self.command == "pipeline":
            if self.pipeline not in PIPELINES:
                raise ConfigError(f"unknown pipeline id {self.pipeline!r}; choose 1-5")
            if self.image is not None and self.pipeline != 5:
                raise ConfigError("--image is only supported by pipeline 5")
            if self.variant not in ("potential", "solenoidal"):
                raise ConfigError(f"unknown variant {self.variant!r}")
        if self.command == "forward":
            bad = [t for t in self.transforms if t not in TRANSFORMS]
            if bad or not self.transforms:
                raise ConfigError(f"unknown transform(s) {bad}; choose from {TRANSFORMS}")
        if self.stencil not in STENCILS:
            raise ConfigError(f"unknown stencil {self.stencil!r}; choose from {STENCILS}")
        if self.window not in (None, "ramp", "hann"):
            raise ConfigError(f"unknown filter window {self.window!r}")
        try:
            self.geometry()
            s = self.star()
            self.noise()
            self.pad()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if self.command == "pipeline" and self.pipeline == 5 and s.is_symmetric():
            raise ConfigError("symmetric star: the star transform is not invertible")
        return self

    # --- derived objects -------------------------------------------------
    def geometry(self) -> VLineGeometry:
        return VLineGeometry.from_angles(math.radians(self.u_angle), math.radians(self.v_angle))

    def star(self) -> StarGeometry:
        w = None if self.star_weights is None else tuple(self.star_weights)
        return StarGeometry(tuple(math.radians(a) for a in self.star_angles), w)

    def noise(self) -> NoiseSpec:
        return NoiseSpec(self.noise_level, self.seed, self.noise_model)

    def pad(self) -> PadSpec:
        pf = self.pad_factor if self.pad_factor is not None else default_pad(self.pipeline or 0)
        return PadSpec(pf, self.support_radius)

    def grid(self) -> Grid2D:
        return make_grid(self.n, self.half_extent)

    # --- serialization ---------------------------------------------------
    def resolved(self) -> "RunConfig":
        """Copy with every default that depends on other fields filled in."""
        d = asdict(self)
        if self.command == "pipeline":
            if d["pad_factor"] is None:
                d["pad_factor"] = default_pad(self.pipeline)
            if d["phantom"] is None and self.image is None and self.input is None:
                d["phantom"] = DEFAULT_PHANTOM[self.pipeline]
        return RunConfig(**d)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        d = json.loads(text)
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(d) - known)
        if unknown:
            raise ConfigError(f"unknown config keys {unknown}")
        return cls(**d)

    def save(self, directory) -> Path:
        p = Path(directory) / "config.json"
        p.write_text(self.to_json() + "\n")
        return p


def _outdir(cfg: RunConfig) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def load_input_field(cfg: RunConfig) -> VectorField:
    """The field a run starts from: input file, RGB image or phantom."""
    if cfg.input is not None:
        try:
            f = read_field(cfg.input)
        except (OSError, ValueError) as exc:
            raise ConfigError(f"cannot read field file {cfg.input}: {exc}") from None
        if not isinstance(f, VectorField):
            raise ConfigError(f"{cfg.input} holds a scalar field; a vector field is needed")
        return f
    if cfg.image is not None:
        try:
            f = field_from_rgb_image(cfg.image, size=cfg.n)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        return f
    pid = cfg.phantom if cfg.phantom is not None else 2
    return phantom(pid, cfg.grid())


def _save_components(out: Path, stem: str, f: VectorField, bounds: dict) -> dict:
    files = {}
    for k, c in enumerate(f.components, start=1):
        p = out / f"{stem}_f{k}.png"
        bounds[p.name] = list(save_png(p, c))
        files[f"{stem}_f{k}_png"] = str(p)
    return files


def run_phantom(cfg: RunConfig) -> dict:
    out = _outdir(cfg)
    f = load_input_field(cfg)
    files = {"field": str(write_field(out / "field.vlf", f))}
    bounds = {}
    files.update(_save_components(out, "field", f, bounds))
    save_quiver_png(out / "quiver.png", f)
    files["quiver_png"] = str(out / "quiver.png")
    cfg.save(out)
    return {"files": files, "bounds": bounds}


def _forward(f: VectorField, name: str, cfg: RunConfig):
    g = cfg.geometry()
    if name == "star":
        return star(f, cfg.star())
    return ({"lvt": lvt, "tvt": tvt, "lvt1": lvt1, "tvt1": tvt1}[name](f, g),)


def run_forward(cfg: RunConfig) -> dict:
    out = _outdir(cfg)
    f = load_input_field(cfg)
    files, bounds = {}, {}
    for name in cfg.transforms:
        data = _forward(f, name, cfg)
        labels = ["long", "trans"] if name == "star" else [None]
        for lab, d in zip(labels, data):
            stem = name if lab is None else f"{name}_{lab}"
            files[stem] = str(write_field(out / f"{stem}.vlf", d))
            bounds[f"{stem}.png"] = list(save_png(out / f"{stem}.png", d))
            files[f"{stem}_png"] = str(out / f"{stem}.png")
    cfg.save(out)
    return {"files": files, "bounds": bounds}


def _noisy(channels, spec: NoiseSpec):
    return [add_noise(c, spec.child(k)) for k, c in enumerate(channels)]


def _pipeline_data(cfg: RunConfig):
    """Ground truth on the output grid, plus the reconstruction."""
    p = cfg.pipeline
    g = cfg.geometry()
    spec = cfg.noise()
    pad = cfg.pad()
    extra = {}
    if p == 1:
        grid = cfg.grid()
        pot = bump_potential()
        W = pot.sample(grid)
        if cfg.variant == "potential":
            f = gradient_field(pot, grid)
            (Tf,) = _noisy([tvt(f, g)], spec)
            return W, recover_potential(Tf, g), extra
        f = perp_gradient_field(pot, grid)
        (Lf,) = _noisy([lvt(f, g)], spec)
        return W, recover_solenoidal(Lf, g), extra

    f_out = load_input_field(cfg)
    grid = f_out.grid
    if p in (3, 4):
        f_out = truncate_to_disc(f_out, pad.support_radius * grid.half_extent)
    big = pad.data_grid(grid)
    f = embed(f_out, big) if big != grid else f_out
    if p == 2:
        Lf, Tf = _noisy(vline_transforms(f, g), spec)
        rec = recover_from_lvt_tvt(Lf, Tf, g)
    elif p == 3:
        Lf, Tf = vline_transforms(f, g)
        If, Jf = vline_transforms(f, g, moment=True)
        Lf, If = _noisy([Lf, If], spec)
        rec = recover_from_lvt_moment(Lf, If, g, stencil=cfg.stencil)
    elif p == 4:
        Lf, Tf = vline_transforms(f, g)
        If, Jf = vline_transforms(f, g, moment=True)
        Tf, Jf = _noisy([Tf, Jf], spec)
        rec = recover_from_tvt_moment(Tf, Jf, g, stencil=cfg.stencil)
    else:
        s = cfg.star()
        S_long, S_trans = _noisy(star(f, s), spec)
        rec = recover_from_star(S_long, S_trans, s, cfg.window)
        extra["singular_angles"] = singular_angles(s)
    if big != grid:
        rec = crop(rec, grid)
    extra["diagnostics"] = field_diagnostics(rec, cfg.inset_radius)
    return f_out, rec, extra


def run_pipeline(cfg: RunConfig) -> tuple[ReconReport, VectorField | ScalarField]:
    cfg = cfg.resolved()
    out = _outdir(cfg)
    t0 = time.perf_counter()
    truth, rec, extra = _pipeline_data(cfg)
    seconds = time.perf_counter() - t0
    inset = None if cfg.image is not None else cfg.inset_radius
    files = {"reconstruction": str(write_field(out / "recon.vlf", rec))}
    bounds = {}
    if isinstance(rec, ScalarField):
        pairs = [(rec, truth)]
        bounds["recon.png"] = list(save_png(out / "recon.png", rec))
        bounds["diff.png"] = list(save_png(out / "diff.png", rec - truth))
        files.update(recon_png=str(out / "recon.png"), diff_png=str(out / "diff.png"))
    else:
        pairs = list(zip(rec.components, truth.components))
        files.update(_save_components(out, "recon", rec, bounds))
        files.update(_save_components(out, "diff", rec - truth, bounds))
        if cfg.image is not None:
            save_rgb_png(out / "input_rgb.png", truth)
            save_rgb_png(out / "recon_rgb.png", rec)
            files.update(input_rgb_png=str(out / "input_rgb.png"), recon_rgb_png=str(out / "recon_rgb.png"))
    extra["colormap_bounds"] = bounds
    report = ReconReport(
        pipeline=int(cfg.pipeline),
        label=PIPELINES[cfg.pipeline] + (f" ({cfg.variant})" if cfg.pipeline == 1 else ""),
        geometry={
            "u_angle": cfg.u_angle,
            "v_angle": cfg.v_angle,
            "star_angles": list(cfg.star_angles),
            "star_weights": cfg.star_weights,
        },
        grid={"n": cfg.n, "half_extent": cfg.half_extent, "pad_factor": cfg.pad_factor},
        noise={"level": cfg.noise_level, "seed": cfg.seed, "model": cfg.noise_model},
        rel_l2=[rel_l2(a, b, inset) for a, b in pairs],
        max_err=[max_err(a, b, inset) for a, b in pairs],
        inset_radius=inset,
        seconds=seconds,
        files=files,
        extra=extra,
    )
    files["config"] = str(cfg.save(out))
    files["report"] = str(out / "report.json")
    report.save(out / "report.json")
    return report, rec


def aggregate_reports(reports) -> str:
    """Text table: one row per (pipeline, label), one column per noise level.

    Cells hold the mean over components of interior relative L2 error, and
    the median over seeds when several reports share a cell.
    """
    cells: dict = {}
    levels = set()
    for r in reports:
        lev = float(r.noise.get("level", 0.0))
        levels.add(lev)
        cells.setdefault((r.pipeline, r.label), {}).setdefault(lev, []).append(float(np.mean(r.rel_l2)))
    levels = sorted(levels)
    head = ["pipeline", "label"] + [f"noise={100 * lev:g}%" for lev in levels]
    rows = [head]
    for (pid, label), by_level in sorted(cells.items()):
        row = [str(pid), label]
        for lev in levels:
            vals = by_level.get(lev)
            row.append("-" if not vals else f"{np.median(vals):.4f}")
        rows.append(row)
    widths = [max(len(r[k]) for r in rows) for k in range(len(head))]
    return "\n".join("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in rows)
