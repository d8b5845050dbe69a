"""Skeleton sourcing: synthetic degradation and external skeleton loading.

The degrader imitates the imperfections of a learned scan-to-skeleton
translator: short dark line segments that do not correspond to any
divider, plus mild gray jitter.  Artifacts are placed only on clear
background, away from existing ink, so each one stays an isolated run
that the downstream run-length filter can reject.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .model import ConfigError, RasterImage, TablegridError
from .xycut import binarize, project, to_luminance

#: Placement keeps this many px between an artifact and existing ink.
CLEARANCE = 3

#: Pixels at or below this intensity count as ink for placement checks.
_INK_LEVEL = 200

_PLACEMENT_TRIES = 200


@dataclass(frozen=True)
class NoiseParams:
    """Degradation knobs.

    artifact_len_frac is the artifact length as a fraction of the
    longest true line; keep it below the estimator's run-acceptance
    fraction (0.25) to model rejectable noise.
    """

    artifact_count_range: tuple[int, int] = (2, 5)
    artifact_len_frac: float = 0.2
    artifact_thickness: int = 2
    gray_jitter_sigma: float = 0.0
    seed: int = 0


def _longest_true_lines(img: RasterImage) -> tuple[int, int]:
    """Longest (horizontal, vertical) ink runs of an image."""
    binary = binarize(img)
    h_runs = project(binary, "horizontal").run_lengths
    v_runs = project(binary, "vertical").run_lengths
    h_max = int(h_runs.max()) if h_runs.size else 0
    v_max = int(v_runs.max()) if v_runs.size else 0
    return h_max, v_max


def degrade(skeleton: RasterImage, p: NoiseParams) -> RasterImage:
    """Add line artifacts and gray jitter to a skeleton image.

    Dimensions are preserved.  Artifacts are axis-aligned dark segments
    of length artifact_len_frac times the longest true line of the same
    orientation (so a fraction below the estimator's run-acceptance
    threshold stays below it on both axes), placed uniformly at random
    but redrawn (up to a bounded number of tries) whenever they would
    come within CLEARANCE px of existing ink; an artifact that cannot
    be placed is skipped.  With zero artifacts and zero jitter the
    output equals the input.
    """
    lo, hi = p.artifact_count_range
    if lo > hi or lo < 0:
        raise ConfigError(f"bad artifact_count_range [{lo}, {hi}]")
    if p.artifact_thickness < 1:
        raise ConfigError("artifact_thickness must be >= 1")
    gray = to_luminance(skeleton)
    arr = np.array(gray.pixels)
    height, width = arr.shape
    rng = np.random.default_rng(p.seed)
    count = int(rng.integers(lo, hi + 1))
    h_line, v_line = _longest_true_lines(skeleton)
    h_len = int(round(p.artifact_len_frac * h_line))
    v_len = int(round(p.artifact_len_frac * v_line))
    if h_len >= 1 or v_len >= 1:
        for _ in range(count):
            for _try in range(_PLACEMENT_TRIES):
                horizontal = bool(rng.integers(2))
                length = h_len if horizontal else v_len
                if length < 1:
                    continue
                w = length if horizontal else p.artifact_thickness
                h = p.artifact_thickness if horizontal else length
                if w > width or h > height:
                    break
                x = int(rng.integers(0, width - w + 1))
                y = int(rng.integers(0, height - h + 1))
                y_lo = max(y - CLEARANCE, 0)
                x_lo = max(x - CLEARANCE, 0)
                window = arr[y_lo:y + h + CLEARANCE, x_lo:x + w + CLEARANCE]
                if (window <= _INK_LEVEL).any():
                    continue
                arr[y:y + h, x:x + w] = 0
                break
    if p.gray_jitter_sigma > 0:
        noise = rng.normal(0.0, p.gray_jitter_sigma, arr.shape)
        arr = np.clip(np.rint(arr + noise), 0, 255).astype(np.uint8)
    return RasterImage(arr)


def load_external(path: str | Path, target_w: int, target_h: int) -> RasterImage:
    """Load an externally produced skeleton and bring it to target size.

    Used to carry low-resolution generated skeletons (for example
    256x256 model outputs) into the native estimation space; estimates
    made in the resampled space can be scaled back with
    model.scale_genotype.  Bilinear resampling; an image already at the
    target size is returned pixel-identical.
    """
    if target_w < 1 or target_h < 1:
        raise TablegridError("target dimensions must be positive")
    img = RasterImage.load(path)
    if (img.width, img.height) == (target_w, target_h):
        return img
    mode = "L" if img.channels == 1 else "RGB"
    resized = Image.fromarray(img.pixels, mode=mode).resize(
        (target_w, target_h), Image.BILINEAR)
    return RasterImage(np.asarray(resized))
