"""Skeleton degradation and external skeleton loading."""

import numpy as np
import pytest

from tablegrid import (
    ConfigError,
    NoiseParams,
    RasterImage,
    TablegridError,
    degrade,
    estimate_structure,
    load_external,
)
from tablegrid.noise import CLEARANCE, _longest_true_lines


def test_zero_artifacts_zero_jitter_is_identity(blurry_skeleton):
    out = degrade(blurry_skeleton, NoiseParams(
        artifact_count_range=(0, 0), gray_jitter_sigma=0.0, seed=3))
    assert np.array_equal(out.pixels, blurry_skeleton.pixels)


def test_degrade_is_deterministic(blurry_skeleton):
    p = NoiseParams(artifact_count_range=(3, 5), gray_jitter_sigma=2.0, seed=11)
    a = degrade(blurry_skeleton, p)
    b = degrade(blurry_skeleton, p)
    assert np.array_equal(a.pixels, b.pixels)


def test_degrade_adds_dark_artifacts(blurry_skeleton):
    p = NoiseParams(artifact_count_range=(4, 4), seed=2)
    out = degrade(blurry_skeleton, p)
    changed = (out.pixels != blurry_skeleton.pixels)
    assert changed.any()
    assert (out.pixels[changed] == 0).all()  # artifacts paint pure black


def test_degrade_preserves_dimensions(blurry_skeleton):
    out = degrade(blurry_skeleton, NoiseParams(seed=1))
    assert (out.width, out.height) == (blurry_skeleton.width,
                                       blurry_skeleton.height)


def test_artifacts_keep_clearance_from_existing_ink(blurry_skeleton):
    p = NoiseParams(artifact_count_range=(5, 5), seed=4)
    out = degrade(blurry_skeleton, p)
    new_ink = (out.pixels == 0) & (blurry_skeleton.pixels > 0)
    ys, xs = np.nonzero(new_ink)
    base = blurry_skeleton.pixels
    for y, x in zip(ys, xs):
        window = base[max(y - CLEARANCE, 0):y + CLEARANCE + 1,
                      max(x - CLEARANCE, 0):x + CLEARANCE + 1]
        assert (window > 200).all()


def test_short_artifacts_leave_estimates_unchanged(blurry_skeleton):
    clean = estimate_structure(blurry_skeleton)
    p = NoiseParams(artifact_count_range=(3, 6), artifact_len_frac=0.2,
                    gray_jitter_sigma=4.0, seed=7)
    noisy = estimate_structure(degrade(blurry_skeleton, p))
    assert noisy == clean


def test_artifact_length_tracks_same_orientation_line(blurry_skeleton):
    h_line, v_line = _longest_true_lines(blurry_skeleton)
    p = NoiseParams(artifact_count_range=(1, 1), artifact_len_frac=0.2,
                    artifact_thickness=2, seed=5)
    out = degrade(blurry_skeleton, p)
    new_ink = (out.pixels == 0) & (blurry_skeleton.pixels > 0)
    # one axis-aligned segment: its bounding box is length x thickness,
    # with length taken from the matching axis's longest line
    ys, xs = np.nonzero(new_ink)
    h_span = int(xs.max() - xs.min() + 1)
    v_span = int(ys.max() - ys.min() + 1)
    if h_span > v_span:  # horizontal artifact
        assert (h_span, v_span) == (int(round(0.2 * h_line)), 2)
    else:
        assert (v_span, h_span) == (int(round(0.2 * v_line)), 2)


def test_degrade_rejects_bad_params(blurry_skeleton):
    with pytest.raises(ConfigError):
        degrade(blurry_skeleton, NoiseParams(artifact_count_range=(5, 2)))
    with pytest.raises(ConfigError):
        degrade(blurry_skeleton, NoiseParams(artifact_thickness=0))


def test_load_external_passthrough_at_target_size(tmp_path, blurry_skeleton):
    path = tmp_path / "skel.png"
    blurry_skeleton.save(path)
    out = load_external(path, blurry_skeleton.width, blurry_skeleton.height)
    assert np.array_equal(out.pixels, blurry_skeleton.pixels)


def test_load_external_resizes_to_target(tmp_path):
    path = tmp_path / "small.png"
    RasterImage(np.full((256, 256), 200, dtype=np.uint8)).save(path)
    out = load_external(path, 595, 842)
    assert (out.width, out.height) == (595, 842)
    assert (out.pixels == 200).all()


def test_load_external_rejects_bad_target(tmp_path):
    path = tmp_path / "img.png"
    RasterImage.white(4, 4).save(path)
    with pytest.raises(TablegridError):
        load_external(path, 0, 100)
