"""Core data model: table genotypes, raster buffers, validation.

A table genotype describes latent table structure on a fixed pixel
canvas: declared maximum cardinality, the upper-left origin, and one
extent per potential row/column.  Zero extents encode absent rows or
columns, so the effective cardinality is always derived from the
positive entries.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

#: Thickness in pixels of a rendered grid-line core.  Rendering centres
#: the core on the line position, so it reaches core//2 px past the
#: genotype bounding box on every side.
BORDER_THICKNESS = 3

#: Pixels the rendered core may extend past the bounding box; canvas
#: containment checks reserve this much room on the right/bottom.
BORDER_PAD = BORDER_THICKNESS // 2 + 1

#: Default canvas, A4 at 72 ppi (width, height).
CANVAS = (595, 842)


class TablegridError(Exception):
    """Base class for all errors raised by this package."""


class GenotypeError(TablegridError):
    """Malformed genotype or genotype/canvas mismatch."""


class ConfigError(TablegridError):
    """Unusable sampling configuration."""


class EstimationError(TablegridError):
    """Structure estimation could not produce a table."""


class GAError(TablegridError):
    """Genetic-algorithm contract violation (degenerate or mismatched input)."""


class DeskewError(TablegridError):
    """Skew estimation failed, e.g. no usable line structure."""


# ---------------------------------------------------------------------------
# genotype
# ---------------------------------------------------------------------------

_GENOTYPE_KEYS = ("max_rows", "max_cols", "origin_x", "origin_y",
                  "row_heights", "col_widths")


@dataclass(frozen=True)
class TableGenotype:
    """Latent table structure.

    Attributes:
        max_rows: Declared maximum number of rows (length of row_heights).
        max_cols: Declared maximum number of columns (length of col_widths).
        origin_x: x of the table's upper-left corner, px.
        origin_y: y of the table's upper-left corner, px.
        row_heights: One height per potential row; 0 marks an absent row.
        col_widths: One width per potential column; 0 marks an absent column.
    """

    max_rows: int
    max_cols: int
    origin_x: int
    origin_y: int
    row_heights: tuple[int, ...]
    col_widths: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "row_heights",
                           tuple(int(h) for h in self.row_heights))
        object.__setattr__(self, "col_widths",
                           tuple(int(w) for w in self.col_widths))
        object.__setattr__(self, "max_rows", int(self.max_rows))
        object.__setattr__(self, "max_cols", int(self.max_cols))
        object.__setattr__(self, "origin_x", int(self.origin_x))
        object.__setattr__(self, "origin_y", int(self.origin_y))
        if len(self.row_heights) != self.max_rows:
            raise GenotypeError(
                f"row_heights has {len(self.row_heights)} entries, "
                f"expected max_rows={self.max_rows}")
        if len(self.col_widths) != self.max_cols:
            raise GenotypeError(
                f"col_widths has {len(self.col_widths)} entries, "
                f"expected max_cols={self.max_cols}")

    @property
    def effective_rows(self) -> int:
        return sum(1 for h in self.row_heights if h > 0)

    @property
    def effective_cols(self) -> int:
        return sum(1 for w in self.col_widths if w > 0)

    def positive_heights(self) -> tuple[int, ...]:
        """Heights of present rows, top to bottom."""
        return tuple(h for h in self.row_heights if h > 0)

    def positive_widths(self) -> tuple[int, ...]:
        """Widths of present columns, left to right."""
        return tuple(w for w in self.col_widths if w > 0)

    # -- serialization ------------------------------------------------

    def to_json_dict(self) -> dict:
        return {
            "max_rows": self.max_rows,
            "max_cols": self.max_cols,
            "origin_x": self.origin_x,
            "origin_y": self.origin_y,
            "row_heights": list(self.row_heights),
            "col_widths": list(self.col_widths),
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "TableGenotype":
        missing = [k for k in _GENOTYPE_KEYS if k not in data]
        if missing:
            raise GenotypeError(f"genotype JSON missing keys: {missing}")
        for key in _GENOTYPE_KEYS:
            value = data[key]
            flat = value if isinstance(value, list) else [value]
            if not all(isinstance(v, int) and not isinstance(v, bool) for v in flat):
                raise GenotypeError(f"genotype field {key!r} must hold integers")
        return cls(
            max_rows=data["max_rows"],
            max_cols=data["max_cols"],
            origin_x=data["origin_x"],
            origin_y=data["origin_y"],
            row_heights=tuple(data["row_heights"]),
            col_widths=tuple(data["col_widths"]),
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(
            json.dumps(self.to_json_dict(), indent=2, sort_keys=True) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "TableGenotype":
        try:
            data = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise GenotypeError(f"cannot parse genotype file {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise GenotypeError(f"genotype file {path} does not hold a JSON object")
        return cls.from_json_dict(data)


def bounding_box(g: TableGenotype) -> tuple[int, int, int, int]:
    """Return (x, y, width, height) covered by the effective grid.

    The box spans from the origin to the last grid line; the rendered
    border core extends up to BORDER_PAD px further on each side.
    """
    return (g.origin_x, g.origin_y,
            sum(g.positive_widths()), sum(g.positive_heights()))


def grid_positions(g: TableGenotype) -> tuple[np.ndarray, np.ndarray]:
    """Grid-line coordinates (ys of horizontal lines, xs of vertical lines).

    A table with r effective rows has r + 1 horizontal lines; same for
    columns.  Positions are cumulative sums of the positive extents
    shifted by the origin.
    """
    ys = g.origin_y + np.concatenate(
        ([0], np.cumsum(g.positive_heights()))).astype(int)
    xs = g.origin_x + np.concatenate(
        ([0], np.cumsum(g.positive_widths()))).astype(int)
    return ys, xs


@dataclass(frozen=True)
class ValidationResult:
    ok: bool
    reason: str | None = None

    def __bool__(self) -> bool:
        return self.ok


def validate_genotype(g: TableGenotype, canvas_w: int,
                      canvas_h: int) -> ValidationResult:
    """Check a genotype against a canvas; reports the first violation.

    Invariants: extents are non-negative, at least one row and one
    column is present, the origin is non-negative, and the bounding box
    plus the border core fits inside the canvas.
    """
    for i, h in enumerate(g.row_heights):
        if h < 0:
            return ValidationResult(False, f"negative row height at index {i}")
    for j, w in enumerate(g.col_widths):
        if w < 0:
            return ValidationResult(False, f"negative column width at index {j}")
    if g.effective_rows == 0:
        return ValidationResult(False, "zero effective rows")
    if g.effective_cols == 0:
        return ValidationResult(False, "zero effective columns")
    if g.origin_x < 0 or g.origin_y < 0:
        return ValidationResult(False, "negative origin")
    x, y, w, h = bounding_box(g)
    if x + w + BORDER_PAD > canvas_w:
        return ValidationResult(
            False, f"overflow: x extent {x + w} exceeds canvas width {canvas_w}")
    if y + h + BORDER_PAD > canvas_h:
        return ValidationResult(
            False, f"overflow: y extent {y + h} exceeds canvas height {canvas_h}")
    return ValidationResult(True)


def require_valid(g: TableGenotype, canvas_w: int, canvas_h: int) -> None:
    result = validate_genotype(g, canvas_w, canvas_h)
    if not result:
        raise GenotypeError(result.reason)


def scale_genotype(g: TableGenotype, sx: float, sy: float) -> TableGenotype:
    """Rescale a genotype estimated in a resampled space.

    Multiplies x quantities by sx and y quantities by sy, rounding to
    the nearest integer, e.g. to carry a structure estimated on a
    256x256 image back to the native canvas.
    """
    return TableGenotype(
        max_rows=g.max_rows,
        max_cols=g.max_cols,
        origin_x=int(round(g.origin_x * sx)),
        origin_y=int(round(g.origin_y * sy)),
        row_heights=tuple(int(round(h * sy)) for h in g.row_heights),
        col_widths=tuple(int(round(w * sx)) for w in g.col_widths),
    )


# ---------------------------------------------------------------------------
# image buffers
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RasterImage:
    """Immutable 8-bit image: (h, w) grayscale or (h, w, 3) RGB."""

    pixels: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.pixels)
        if arr.dtype != np.uint8:
            if np.issubdtype(arr.dtype, np.integer) or np.issubdtype(arr.dtype, np.floating):
                if arr.size and (arr.min() < 0 or arr.max() > 255):
                    raise TablegridError("pixel values outside [0, 255]")
                arr = arr.astype(np.uint8)
            else:
                raise TablegridError(f"unsupported pixel dtype {arr.dtype}")
        if arr.ndim == 3 and arr.shape[2] == 1:
            arr = arr[:, :, 0]
        if arr.ndim not in (2, 3) or (arr.ndim == 3 and arr.shape[2] != 3):
            raise TablegridError(f"unsupported image shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise TablegridError("image must have at least one pixel")
        arr = np.ascontiguousarray(arr)
        arr.flags.writeable = False
        object.__setattr__(self, "pixels", arr)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def channels(self) -> int:
        return 1 if self.pixels.ndim == 2 else self.pixels.shape[2]

    @classmethod
    def white(cls, width: int, height: int) -> "RasterImage":
        return cls(np.full((height, width), 255, dtype=np.uint8))

    @classmethod
    def load(cls, path: str | Path) -> "RasterImage":
        try:
            with Image.open(path) as im:
                if im.mode in ("L", "RGB"):
                    converted = im.copy()
                elif im.mode in ("1", "I", "I;16", "LA"):
                    converted = im.convert("L")
                else:
                    converted = im.convert("RGB")
        except (OSError, ValueError) as exc:
            raise TablegridError(f"cannot read image {path}: {exc}") from exc
        return cls(np.asarray(converted))

    def save(self, path: str | Path) -> None:
        mode = "L" if self.channels == 1 else "RGB"
        Image.fromarray(self.pixels, mode=mode).save(path, format="PNG")


@dataclass(frozen=True)
class BinaryImage:
    """Boolean ink mask derived from a luminance threshold; True = black."""

    bits: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.bits)
        if arr.dtype != np.bool_:
            raise TablegridError("binary image requires a boolean array")
        if arr.ndim != 2:
            raise TablegridError(f"binary image must be 2-D, got shape {arr.shape}")
        arr = np.ascontiguousarray(arr)
        arr.flags.writeable = False
        object.__setattr__(self, "bits", arr)

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    @property
    def width(self) -> int:
        return self.bits.shape[1]
