"""Projection-based table structure estimation.

The estimator binarizes a skeleton image by a luminance threshold,
projects the ink mask onto both axes as per-scanline longest-run
profiles, and reads divider positions from those profiles: a scanline
belongs to a divider band when its longest black run is at least
``min_frac`` of the longest run on that axis, and each contiguous band
collapses to a single divider at its centroid.  Short marks (text
remnants, stray segments) never reach the run threshold, so only
full-length grid lines survive.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from .model import (
    BinaryImage,
    EstimationError,
    RasterImage,
    TableGenotype,
)

#: Rec. 601 luma weights for RGB -> grayscale reduction.
LUMA_WEIGHTS = (0.299, 0.587, 0.114)

#: Luminance values strictly above this count as white.
DEFAULT_THRESHOLD = 125

#: A scanline joins a divider band when its longest run is at least
#: this fraction of the axis maximum.
DEFAULT_MIN_FRAC = 0.25

Axis = Literal["horizontal", "vertical"]


@dataclass(frozen=True)
class ProjectionProfile:
    """Longest contiguous black run per scanline along one axis.

    axis="horizontal" profiles rows (detects horizontal dividers),
    axis="vertical" profiles columns (detects vertical dividers).
    """

    axis: Axis
    run_lengths: np.ndarray

    def __post_init__(self):
        arr = np.ascontiguousarray(np.asarray(self.run_lengths, dtype=np.int64))
        arr.flags.writeable = False
        object.__setattr__(self, "run_lengths", arr)


@dataclass(frozen=True)
class DividerSet:
    """Detected grid-line coordinates on both axes."""

    horizontal_positions: tuple[int, ...]  # y of horizontal lines
    vertical_positions: tuple[int, ...]    # x of vertical lines


def to_luminance(img: RasterImage) -> RasterImage:
    """Reduce an image to single-channel luminance.

    RGB images are combined as 0.299 R + 0.587 G + 0.114 B with the
    result rounded to the nearest integer; grayscale images pass
    through unchanged.
    """
    if img.channels == 1:
        return img
    rgb = img.pixels.astype(np.float64)
    lum = (LUMA_WEIGHTS[0] * rgb[:, :, 0]
           + LUMA_WEIGHTS[1] * rgb[:, :, 1]
           + LUMA_WEIGHTS[2] * rgb[:, :, 2])
    return RasterImage(np.rint(lum).astype(np.uint8))


def binarize(img: RasterImage, threshold: int = DEFAULT_THRESHOLD) -> BinaryImage:
    """Threshold luminance into an ink mask.

    Values strictly above ``threshold`` become white (False); values at
    or below it become black (True).
    """
    gray = to_luminance(img)
    return BinaryImage(gray.pixels <= threshold)


def _longest_runs(mask: np.ndarray) -> np.ndarray:
    """Longest run of True per row of a 2-D boolean array."""
    n_rows, n_cols = mask.shape
    padded = np.zeros((n_rows, n_cols + 2), dtype=np.int8)
    padded[:, 1:-1] = mask
    steps = np.diff(padded, axis=1)
    start_rows, start_cols = np.nonzero(steps == 1)
    end_rows, end_cols = np.nonzero(steps == -1)
    # starts and ends alternate within each row, so the row-major
    # nonzero order pairs them exactly
    lengths = end_cols - start_cols
    out = np.zeros(n_rows, dtype=np.int64)
    np.maximum.at(out, start_rows, lengths)
    return out


def project(binary: BinaryImage, axis: Axis) -> ProjectionProfile:
    """Profile of longest black runs per scanline along one axis."""
    if axis == "horizontal":
        runs = _longest_runs(binary.bits)
    elif axis == "vertical":
        runs = _longest_runs(binary.bits.T)
    else:
        raise ValueError(f"unknown axis {axis!r}")
    return ProjectionProfile(axis=axis, run_lengths=runs)


def detect_dividers(profile: ProjectionProfile,
                    min_frac: float = DEFAULT_MIN_FRAC) -> tuple[int, ...]:
    """Collapse a run profile into divider positions.

    Scanlines whose longest run is at least ``min_frac`` times the axis
    maximum are accepted; contiguous accepted scanlines form a band and
    each band reports its centroid rounded to the nearest pixel.
    """
    runs = profile.run_lengths
    max_run = int(runs.max()) if runs.size else 0
    if max_run == 0:
        raise EstimationError("no lines found on axis " + profile.axis)
    accepted = np.nonzero(runs >= min_frac * max_run)[0]
    # split accepted scanlines into contiguous bands
    breaks = np.nonzero(np.diff(accepted) > 1)[0]
    bands = np.split(accepted, breaks + 1)
    return tuple(int(np.floor(band.mean() + 0.5)) for band in bands)


def find_dividers(img: RasterImage, threshold: int = DEFAULT_THRESHOLD,
                  min_frac: float = DEFAULT_MIN_FRAC) -> DividerSet:
    """Detect grid lines on both axes of a skeleton image."""
    binary = binarize(img, threshold)
    h_pos = detect_dividers(project(binary, "horizontal"), min_frac)
    v_pos = detect_dividers(project(binary, "vertical"), min_frac)
    return DividerSet(horizontal_positions=h_pos, vertical_positions=v_pos)


def estimate_structure(skeleton: RasterImage, *,
                       threshold: int = DEFAULT_THRESHOLD,
                       min_frac: float = DEFAULT_MIN_FRAC,
                       max_rows: int | None = None,
                       max_cols: int | None = None) -> TableGenotype:
    """Estimate a table genotype from a skeleton image.

    The first band on each axis gives the origin, successive band
    centroid differences give the extents.  Extents are zero-padded up
    to ``max_rows``/``max_cols`` when those exceed the detected counts.

    Raises:
        EstimationError: fewer than two dividers on either axis, or a
            detected cardinality above a requested maximum.
    """
    dividers = find_dividers(skeleton, threshold, min_frac)
    h_pos = dividers.horizontal_positions
    v_pos = dividers.vertical_positions
    if len(h_pos) < 2 or len(v_pos) < 2:
        raise EstimationError(
            f"no table structure: found {len(h_pos)} horizontal and "
            f"{len(v_pos)} vertical divider bands")
    rows = len(h_pos) - 1
    cols = len(v_pos) - 1
    if max_rows is None:
        max_rows = rows
    if max_cols is None:
        max_cols = cols
    if rows > max_rows:
        raise EstimationError(f"estimated {rows} rows exceeds max_rows={max_rows}")
    if cols > max_cols:
        raise EstimationError(f"estimated {cols} columns exceeds max_cols={max_cols}")
    heights = tuple(int(b - a) for a, b in zip(h_pos, h_pos[1:]))
    widths = tuple(int(b - a) for a, b in zip(v_pos, v_pos[1:]))
    return TableGenotype(
        max_rows=max_rows,
        max_cols=max_cols,
        origin_x=v_pos[0],
        origin_y=h_pos[0],
        row_heights=heights + (0,) * (max_rows - rows),
        col_widths=widths + (0,) * (max_cols - cols),
    )
