"""Synthetic table rendering: genotype sampling, scans, skeletons, datasets.

A *scan* imitates a document page: a table with text-block filler in
each cell, a solid outer border, and interior dividers that are each
drawn with probability ``p_vis``.  A *skeleton* is the matching label
image: every grid line of the genotype and nothing else, drawn either
solid or with a blurry gray falloff.

Downstream stages never read glyphs, so cell text is laid out as
filled rectangles sized like words of the configured font.
"""

from __future__ import annotations

import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .model import (
    CANVAS,
    BORDER_THICKNESS,
    ConfigError,
    GenotypeError,
    RasterImage,
    TableGenotype,
    TablegridError,
    grid_positions,
    require_valid,
)

#: Probability that an interior divider is drawn on a scan.
DEFAULT_P_VIS = 0.5

#: Padding between a cell's grid lines and its text blocks, px.
TEXT_PAD = 2

#: Sampling keeps this much clearance between every grid line and the
#: canvas edge, so even the widest (blurry) border falloff stays fully
#: inside the canvas and projection centroids are never biased by
#: clipping.
SAMPLING_MARGIN = 12

_SAMPLE_ATTEMPTS = 1000


# ---------------------------------------------------------------------------
# styles and configurations
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BorderStyle:
    """How grid lines are drawn.

    The core is a solid black band centred on the line position.  In
    blurry mode a symmetric gray gradient continues past the core edge,
    rising linearly to full white over blur_radius + spread px.
    """

    core_thickness: int = BORDER_THICKNESS
    blurry: bool = False
    blur_radius: int = 7
    spread: int = 3

    @property
    def reach(self) -> int:
        """Pixels a line extends past its position on each side."""
        extra = self.blur_radius + self.spread if self.blurry else 0
        return self.core_thickness // 2 + extra


SOLID = BorderStyle(blurry=False)
BLURRY = BorderStyle(blurry=True)


@dataclass(frozen=True)
class TableConfig:
    """Inclusive sampling ranges for one table family."""

    name: str
    row_range: tuple[int, int]
    col_range: tuple[int, int]
    x_offset_range: tuple[int, int]
    y_offset_range: tuple[int, int]
    row_height_range: tuple[int, int]
    col_width_range: tuple[int, int]
    word_len_range: tuple[int, int]
    words_per_cell_range: tuple[int, int]
    font_size: int


BASE = TableConfig(
    name="base",
    row_range=(2, 6),
    col_range=(2, 6),
    x_offset_range=(0, 70),
    y_offset_range=(0, 70),
    row_height_range=(40, 90),
    col_width_range=(70, 100),
    word_len_range=(5, 9),
    words_per_cell_range=(2, 4),
    font_size=10,
)

LARGER_FONT = replace(BASE, name="larger_font", font_size=18)

SMALLER_FONT = replace(BASE, name="smaller_font", font_size=6)

SHORT_CELLS = TableConfig(
    name="short_cells",
    row_range=(4, 10),
    col_range=(4, 10),
    x_offset_range=(0, 70),
    y_offset_range=(0, 70),
    row_height_range=(20, 20),
    col_width_range=(40, 60),
    word_len_range=(1, 4),
    words_per_cell_range=(1, 1),
    font_size=10,
)

BUILTIN_CONFIGS: dict[str, TableConfig] = {
    c.name: c for c in (BASE, LARGER_FONT, SMALLER_FONT, SHORT_CELLS)
}


def derive_seed(*parts: int) -> int:
    """Stable per-entry seed derived from a master seed and indices."""
    return int(np.random.SeedSequence(list(parts)).generate_state(1, np.uint64)[0])


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------


def _check_range(name: str, rng_pair: tuple[int, int]) -> None:
    lo, hi = rng_pair
    if lo > hi:
        raise ConfigError(f"empty range for {name}: [{lo}, {hi}]")


def _draw(rng: np.random.Generator, rng_pair: tuple[int, int], size=None):
    return rng.integers(rng_pair[0], rng_pair[1] + 1, size=size)


def sample_genotype(config: TableConfig, seed: int,
                    canvas: tuple[int, int] = CANVAS,
                    margin: int = SAMPLING_MARGIN) -> TableGenotype:
    """Draw a random genotype from a configuration's ranges.

    Every sampled quantity is uniform over its inclusive range.  Draws
    whose grid would come within ``margin`` px of a canvas edge are
    rejected and redrawn, so rendered borders (including the blurry
    falloff) always stay fully on canvas.  Deterministic given
    (config, seed).
    """
    for field in ("row_range", "col_range", "x_offset_range", "y_offset_range",
                  "row_height_range", "col_width_range", "word_len_range",
                  "words_per_cell_range"):
        _check_range(field, getattr(config, field))
    canvas_w, canvas_h = canvas
    rng = np.random.default_rng(seed)
    for _ in range(_SAMPLE_ATTEMPTS):
        n_rows = int(_draw(rng, config.row_range))
        n_cols = int(_draw(rng, config.col_range))
        x0 = int(_draw(rng, config.x_offset_range))
        y0 = int(_draw(rng, config.y_offset_range))
        heights = tuple(int(v) for v in _draw(rng, config.row_height_range, n_rows))
        widths = tuple(int(v) for v in _draw(rng, config.col_width_range, n_cols))
        if x0 < margin or y0 < margin:
            continue
        if x0 + sum(widths) + margin > canvas_w:
            continue
        if y0 + sum(heights) + margin > canvas_h:
            continue
        return TableGenotype(
            max_rows=n_rows, max_cols=n_cols,
            origin_x=x0, origin_y=y0,
            row_heights=heights, col_widths=widths,
        )
    raise ConfigError(
        f"cannot fit a table from config {config.name!r} on a "
        f"{canvas_w}x{canvas_h} canvas after {_SAMPLE_ATTEMPTS} draws")


# ---------------------------------------------------------------------------
# rendering
# ---------------------------------------------------------------------------


def _line_profile(dim: int, positions: np.ndarray, style: BorderStyle) -> np.ndarray:
    """Perpendicular intensity profile for a set of parallel lines.

    Returns a float array of length ``dim``: 0 inside any line core,
    rising to 255 with distance in blurry mode, 255 elsewhere.
    """
    coords = np.arange(dim, dtype=np.float64)
    dist = np.abs(coords[:, None] - np.asarray(positions, dtype=np.float64)[None, :])
    dist = dist.min(axis=1)
    half = style.core_thickness // 2
    if style.blurry:
        falloff = style.blur_radius + style.spread
        return np.clip((dist - half) / falloff, 0.0, 1.0) * 255.0
    return np.where(dist <= half, 0.0, 255.0)


def render_skeleton(g: TableGenotype, style: BorderStyle = SOLID,
                    canvas: tuple[int, int] = CANVAS) -> RasterImage:
    """Render every grid line of a genotype on a white canvas."""
    canvas_w, canvas_h = canvas
    require_valid(g, canvas_w, canvas_h)
    ys, xs = grid_positions(g)
    return _render_lines(ys, xs, style, canvas)


def _render_lines(ys: np.ndarray, xs: np.ndarray, style: BorderStyle,
                  canvas: tuple[int, int]) -> RasterImage:
    """Compose horizontal lines at ys and vertical lines at xs.

    Lines run the full grid span plus half a core so corners close
    squarely; profiles are white away from the lines, so broadcasting
    them over the grid span composes exactly with a minimum.
    """
    canvas_w, canvas_h = canvas
    half = style.core_thickness // 2
    out = np.full((canvas_h, canvas_w), 255.0)
    if len(ys) > 0 and len(xs) > 0:
        h_profile = _line_profile(canvas_h, ys, style)
        v_profile = _line_profile(canvas_w, xs, style)
        x_lo = max(int(xs[0]) - half, 0)
        x_hi = min(int(xs[-1]) + half + 1, canvas_w)
        y_lo = max(int(ys[0]) - half, 0)
        y_hi = min(int(ys[-1]) + half + 1, canvas_h)
        out[:, x_lo:x_hi] = np.minimum(out[:, x_lo:x_hi], h_profile[:, None])
        out[y_lo:y_hi, :] = np.minimum(out[y_lo:y_hi, :], v_profile[None, :])
    return RasterImage(np.rint(out).astype(np.uint8))


def render_scan(g: TableGenotype, config: TableConfig, seed: int,
                canvas: tuple[int, int] = CANVAS,
                p_vis: float = DEFAULT_P_VIS) -> RasterImage:
    """Render a synthetic scan: text blocks plus a partial grid.

    The outer border is always drawn; each interior divider appears
    independently with probability ``p_vis``.  Cell text is simulated
    as filled rectangles: words of width round(0.6 * font_size * length)
    and height font_size, separated by a font_size-wide gap, flowed
    left to right with TEXT_PAD px padding and clipped to the cell.

    Draw order (row visibilities, column visibilities, then per-cell
    text in row-major order) is fixed, so output is deterministic
    given (g, config, seed).
    """
    canvas_w, canvas_h = canvas
    require_valid(g, canvas_w, canvas_h)
    rng = np.random.default_rng(seed)
    ys, xs = grid_positions(g)

    vis_rows = rng.random(max(len(ys) - 2, 0)) < p_vis
    vis_cols = rng.random(max(len(xs) - 2, 0)) < p_vis
    drawn_ys = np.concatenate(([ys[0]], ys[1:-1][vis_rows], [ys[-1]]))
    drawn_xs = np.concatenate(([xs[0]], xs[1:-1][vis_cols], [xs[-1]]))
    img = _render_lines(drawn_ys, drawn_xs, SOLID, canvas)

    arr = np.array(img.pixels)
    font = config.font_size
    line_step = font + TEXT_PAD
    for i in range(len(ys) - 1):
        for j in range(len(xs) - 1):
            left = int(xs[j]) + TEXT_PAD
            right = int(xs[j + 1]) - TEXT_PAD
            top = int(ys[i]) + TEXT_PAD
            bottom = int(ys[i + 1]) - TEXT_PAD
            n_words = int(_draw(rng, config.words_per_cell_range))
            cx, cy = left, top
            for _ in range(n_words):
                word_len = int(_draw(rng, config.word_len_range))
                width = max(1, int(round(0.6 * font * word_len)))
                if cx + width > right and cx > left:
                    cx = left
                    cy += line_step
                if cy + font > bottom:
                    break
                arr[cy:cy + font, cx:min(cx + width, right)] = 0
                cx += width + font
    return RasterImage(arr)


# ---------------------------------------------------------------------------
# datasets
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ManifestEntry:
    scan_path: str
    skeleton_path: str
    genotype_path: str
    config_name: str
    seed: int

    def to_json_dict(self) -> dict:
        return {
            "scan_path": self.scan_path,
            "skeleton_path": self.skeleton_path,
            "genotype_path": self.genotype_path,
            "config_name": self.config_name,
            "seed": self.seed,
        }


@dataclass(frozen=True)
class DatasetManifest:
    canvas: tuple[int, int]
    entries: tuple[ManifestEntry, ...]
    root: Path | None = None  # set when loaded; not serialized

    def save(self, path: str | Path) -> None:
        data = {
            "canvas": list(self.canvas),
            "entries": [e.to_json_dict() for e in self.entries],
        }
        Path(path).write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "DatasetManifest":
        path = Path(path)
        try:
            data = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise TablegridError(f"cannot parse manifest {path}: {exc}") from exc
        try:
            entries = tuple(ManifestEntry(**e) for e in data["entries"])
            canvas = tuple(data["canvas"])
        except (KeyError, TypeError) as exc:
            raise TablegridError(f"malformed manifest {path}: {exc}") from exc
        if len(canvas) != 2:
            raise TablegridError(f"malformed manifest {path}: bad canvas")
        return cls(canvas=canvas, entries=entries, root=path.parent)

    def resolve(self, relative: str) -> Path:
        root = self.root if self.root is not None else Path(".")
        return root / relative

    def validate_files(self) -> None:
        """Check that every referenced file exists and parses."""
        for entry in self.entries:
            for rel in (entry.scan_path, entry.skeleton_path):
                p = self.resolve(rel)
                if not p.is_file():
                    raise TablegridError(f"manifest references missing file {p}")
            TableGenotype.load(self.resolve(entry.genotype_path))


def worker_count(requested: int | None = None) -> int:
    """Effective worker count, capped by the TABLEGRID_THREADS env var."""
    cap = os.environ.get("TABLEGRID_THREADS")
    limit = None
    if cap is not None:
        try:
            limit = max(1, int(cap))
        except ValueError:
            limit = None
    n = requested if requested and requested > 0 else 1
    if limit is not None:
        n = min(n, limit)
    return n


def _build_entry(task) -> ManifestEntry:
    (out_dir, stem, config, entry_seed, canvas, blurry, p_vis) = task
    style = BLURRY if blurry else SOLID
    out = Path(out_dir)
    g = sample_genotype(config, derive_seed(entry_seed, 0), canvas)
    scan = render_scan(g, config, derive_seed(entry_seed, 1), canvas, p_vis)
    skeleton = render_skeleton(g, style, canvas)
    scan.save(out / f"{stem}.scan.png")
    skeleton.save(out / f"{stem}.skel.png")
    g.save(out / f"{stem}.genotype.json")
    return ManifestEntry(
        scan_path=f"{stem}.scan.png",
        skeleton_path=f"{stem}.skel.png",
        genotype_path=f"{stem}.genotype.json",
        config_name=config.name,
        seed=entry_seed,
    )


def generate_dataset(configs, per_config: int, out_dir: str | Path, seed: int,
                     style: BorderStyle = BLURRY,
                     canvas: tuple[int, int] = CANVAS,
                     p_vis: float = DEFAULT_P_VIS,
                     workers: int | None = None) -> DatasetManifest:
    """Render (scan, skeleton, genotype) triples and write a manifest.

    Each entry gets its own seed derived from (seed, entry index), so
    output is identical for a given seed regardless of worker count.
    Entry files follow the <stem>.scan.png / <stem>.skel.png /
    <stem>.genotype.json pairing convention.
    """
    if per_config < 0:
        raise ConfigError("per_config must be non-negative")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    configs = list(configs)
    tasks = []
    for k, config in enumerate(configs):
        for i in range(per_config):
            idx = k * per_config + i
            stem = f"{idx:05d}_{config.name}"
            tasks.append((str(out), stem, config, derive_seed(seed, idx),
                          canvas, style.blurry, p_vis))
    n_workers = worker_count(workers)
    if n_workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            entries = tuple(pool.map(_build_entry, tasks, chunksize=8))
    else:
        entries = tuple(_build_entry(t) for t in tasks)
    manifest = DatasetManifest(canvas=canvas, entries=entries, root=out)
    manifest.save(out / "manifest.json")
    return manifest
