"""Skew simulation and iterative line-vote deskewing.

Rotation keeps the full content: the output canvas grows to the
rotated bounding box (plus a 1 px border on each side) and exposed
corners fill with white.  Skew estimation projects ink pixels onto
candidate orientations and picks the angle whose projection histogram
concentrates the most mass in a single bin, i.e. the angle at which
line structure aligns; a coarse 1-degree sweep is refined to the final
0.1-degree resolution.  Deskewing applies up to ``passes`` estimate /
back-rotate rounds, stopping early once the estimate falls below the
angular resolution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import map_coordinates

from .model import DeskewError, RasterImage, TablegridError
from .xycut import binarize

#: Largest absolute skew, degrees, considered by estimation.
DEFAULT_MAX_ANGLE = 35.0

#: Final angular resolution of skew estimates, degrees.
ANGLE_RESOLUTION = 0.1

DEFAULT_PASSES = 5

#: Deterministic cap on voting pixels, for speed on dense images.
_MAX_VOTES = 30000


@dataclass(frozen=True)
class SkewReport:
    """Outcome of an iterative deskew run.

    estimated_angle is the first-pass estimate (the dominant skew),
    residual_angle the estimate measured on the final image, and
    passes_applied the number of back-rotations performed.
    """

    estimated_angle: float
    passes_applied: int
    residual_angle: float
    pre_dims: tuple[int, int]
    post_dims: tuple[int, int]

    def to_json_dict(self) -> dict:
        return {
            "estimated_angle": self.estimated_angle,
            "passes_applied": self.passes_applied,
            "residual_angle": self.residual_angle,
            "pre_dims": list(self.pre_dims),
            "post_dims": list(self.post_dims),
        }


def rotate(img: RasterImage, degrees: float, background: int = 255) -> RasterImage:
    """Rotate content by ``degrees`` (positive = clockwise on screen).

    Rotating by a multiple of 360 returns the image unchanged.  The
    output canvas is the rotated bounding box rounded up plus one px of
    border on each side; uncovered pixels take the background value.
    """
    if degrees % 360.0 == 0.0:
        return img
    rad = math.radians(degrees)
    cos_a, sin_a = math.cos(rad), math.sin(rad)
    w, h = img.width, img.height
    out_w = math.ceil(w * abs(cos_a) + h * abs(sin_a)) + 2
    out_h = math.ceil(w * abs(sin_a) + h * abs(cos_a)) + 2

    yy, xx = np.indices((out_h, out_w), dtype=np.float64)
    dx = xx - (out_w - 1) / 2.0
    dy = yy - (out_h - 1) / 2.0
    # inverse map: counter-rotate output coordinates into the source
    src_x = cos_a * dx + sin_a * dy + (w - 1) / 2.0
    src_y = -sin_a * dx + cos_a * dy + (h - 1) / 2.0

    def _sample(plane: np.ndarray) -> np.ndarray:
        vals = map_coordinates(plane.astype(np.float64), [src_y, src_x],
                               order=1, mode="constant", cval=float(background))
        return np.rint(vals).astype(np.uint8)

    if img.channels == 1:
        return RasterImage(_sample(img.pixels))
    out = np.stack([_sample(img.pixels[:, :, c]) for c in range(3)], axis=2)
    return RasterImage(out)


def _vote_pixels(img: RasterImage) -> tuple[np.ndarray, np.ndarray]:
    mask = binarize(img)
    ys, xs = np.nonzero(mask.bits)
    if ys.size == 0:
        raise DeskewError("no line structure: image has no ink pixels")
    if ys.size > _MAX_VOTES:
        stride = ys.size // _MAX_VOTES + 1
        ys, xs = ys[::stride], xs[::stride]
    return ys.astype(np.float64), xs.astype(np.float64)


def _alignment(ys: np.ndarray, xs: np.ndarray, degrees: float) -> int:
    """Energy of the ink projection at a candidate orientation.

    Projecting onto y' = y cos a - x sin a makes y' constant along any
    line tilted clockwise by ``a``, concentrating its votes into few
    bins.  The sum of squared bin counts rewards that concentration
    across every line at once, so it peaks at the true skew where a
    single max-bin vote would drown in interpolation noise.
    """
    rad = math.radians(degrees)
    proj = np.rint(ys * math.cos(rad) - xs * math.sin(rad)).astype(np.int64)
    counts = np.bincount(proj - proj.min())
    return int((counts.astype(np.int64) ** 2).sum())


def estimate_skew(img: RasterImage, max_angle: float = DEFAULT_MAX_ANGLE) -> float:
    """Dominant skew angle of near-horizontal structure, degrees.

    Searches [-max_angle, max_angle]: a 1-degree coarse sweep followed
    by a 0.1-degree refinement around the coarse peak.  Positive
    results mean the content is rotated clockwise, matching rotate().

    Raises:
        DeskewError: the image has no ink pixels to vote with.
    """
    if max_angle <= 0:
        raise TablegridError("max_angle must be positive")
    ys, xs = _vote_pixels(img)

    def best_of(candidates: np.ndarray) -> float:
        scores = [_alignment(ys, xs, a) for a in candidates]
        return float(candidates[int(np.argmax(scores))])

    coarse_grid = np.arange(-math.floor(max_angle), math.floor(max_angle) + 1, 1.0)
    coarse = best_of(coarse_grid)
    lo = max(coarse - 1.0, -max_angle)
    hi = min(coarse + 1.0, max_angle)
    steps = int(round((hi - lo) / ANGLE_RESOLUTION))
    fine_grid = lo + ANGLE_RESOLUTION * np.arange(steps + 1)
    return round(best_of(fine_grid), 3)


def deskew_iterative(img: RasterImage, passes: int = DEFAULT_PASSES,
                     max_angle: float = DEFAULT_MAX_ANGLE
                     ) -> tuple[RasterImage, SkewReport]:
    """Estimate-and-back-rotate until the skew estimate is negligible.

    Runs at most ``passes`` rounds; a round whose estimate is below the
    angular resolution stops the loop without rotating.  Returns the
    deskewed image and a report with the first-pass estimate and the
    residual measured on the final image.
    """
    if passes < 1:
        raise TablegridError("passes must be at least 1")
    current = img
    first_estimate = 0.0
    applied = 0
    for i in range(passes):
        angle = estimate_skew(current, max_angle)
        if i == 0:
            first_estimate = angle
        if abs(angle) < ANGLE_RESOLUTION:
            break
        current = rotate(current, -angle)
        applied += 1
    residual = estimate_skew(current, max_angle)
    report = SkewReport(
        estimated_angle=first_estimate,
        passes_applied=applied,
        residual_angle=residual,
        pre_dims=(img.width, img.height),
        post_dims=(current.width, current.height),
    )
    return current, report


def crop_center(img: RasterImage, target_w: int, target_h: int) -> RasterImage:
    """Center crop to (target_w, target_h).

    The crop origin is ((w - target_w) // 2, (h - target_h) // 2).

    Raises:
        TablegridError: target exceeds the image on either axis.
    """
    if target_w < 1 or target_h < 1:
        raise TablegridError("crop target must be positive")
    if target_w > img.width or target_h > img.height:
        raise TablegridError(
            f"crop target {target_w}x{target_h} exceeds image "
            f"{img.width}x{img.height}")
    x0 = (img.width - target_w) // 2
    y0 = (img.height - target_h) // 2
    return RasterImage(img.pixels[y0:y0 + target_h, x0:x0 + target_w])
