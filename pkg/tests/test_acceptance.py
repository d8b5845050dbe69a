"""End-to-end release checks, one test per shipped guarantee.

Each test exercises a full pipeline slice at its release scale and
asserts the guaranteed numbers verbatim, including runtime budgets
where the guarantee carries one.
"""

import shutil
import time
from pathlib import Path

import numpy as np
import pytest

from tablegrid import (
    BASE,
    BLURRY,
    BUILTIN_CONFIGS,
    GAParams,
    NoiseParams,
    RasterImage,
    TableGenotype,
    aggregate,
    compare,
    crop_center,
    degrade,
    derive_seed,
    estimate_structure,
    evolve,
    generate_dataset,
    grid_positions,
    has_converged,
    metrics_to_csv,
    render_skeleton,
    rotate,
    rotation_sweep,
    sample_genotype,
    to_luminance,
)
from tablegrid.cli import run

CORPUS_SEED = 11


@pytest.fixture(scope="session")
def corpus():
    """400 sampled tables with clean blurry skeletons, 100 per config."""
    tables = []
    for c_idx, config in enumerate(BUILTIN_CONFIGS.values()):
        for i in range(100):
            g = sample_genotype(config, seed=derive_seed(CORPUS_SEED, c_idx, i))
            tables.append((g, render_skeleton(g, BLURRY)))
    return tables


def test_clean_blurry_skeletons_estimate_exactly(corpus):
    start = time.monotonic()
    bad = []
    for idx, (truth, skeleton) in enumerate(corpus):
        c = compare(truth, estimate_structure(skeleton))
        ok = (c.error_free
              and abs(c.x0_error) <= 3 and abs(c.y0_error) <= 3
              and all(e <= 0.03 for e in c.row_height_rel_errors)
              and all(e <= 0.03 for e in c.col_width_rel_errors))
        if not ok:
            bad.append(idx)
    elapsed = time.monotonic() - start
    assert not bad, f"{len(bad)} of {len(corpus)} tables off tolerance: {bad[:10]}"
    assert elapsed < 120.0, f"round trip took {elapsed:.0f}s"


def test_artifact_lines_leave_estimates_unchanged(corpus):
    start = time.monotonic()
    changed = []
    for idx, (truth, skeleton) in enumerate(corpus):
        noisy = degrade(skeleton, NoiseParams(artifact_len_frac=0.2,
                                              seed=derive_seed(CORPUS_SEED, idx)))
        if estimate_structure(noisy) != estimate_structure(skeleton):
            changed.append(idx)
    elapsed = time.monotonic() - start
    assert not changed, f"estimates changed on {len(changed)} tables: {changed[:10]}"
    assert elapsed < 180.0, f"degraded round trip took {elapsed:.0f}s"


def test_luminance_and_center_crop_arithmetic():
    rgb = RasterImage(np.full((1, 1, 3), (100, 150, 200), dtype=np.uint8))
    assert int(to_luminance(rgb).pixels[0, 0]) == 141

    big = np.full((1140, 1015), 255, dtype=np.uint8)
    big[149, 210] = 7  # lands at (0, 0) iff offsets are exactly (210, 149)
    cropped = crop_center(RasterImage(big), 595, 842)
    assert cropped.pixels.shape == (842, 595)
    assert int(cropped.pixels[0, 0]) == 7


def test_ga_monotone_history_divider_recovery_and_convergence():
    truth = sample_genotype(BASE, seed=40)
    target = render_skeleton(truth, BLURRY)
    start_genotype = TableGenotype(
        truth.max_rows, truth.max_cols,
        truth.origin_x + 8, truth.origin_y + 8,
        truth.row_heights, truth.col_widths)
    true_ys, true_xs = grid_positions(truth)

    start = time.monotonic()
    histories = []
    successes = 0
    for seed in range(50):
        best, history = evolve(start_genotype, target, GAParams(seed=seed))
        histories.append(history)
        ys, xs = grid_positions(best)
        if (len(ys) == len(true_ys) and len(xs) == len(true_xs)
                and np.abs(ys - true_ys).max() <= 3
                and np.abs(xs - true_xs).max() <= 3):
            successes += 1
    elapsed = time.monotonic() - start

    for history in histories[:20]:
        assert all(b <= a for a, b in zip(history, history[1:])), \
            "best fitness increased within a run"
    assert has_converged([0.40, 0.398, 0.397, 0.396], 0.01, 3)
    assert elapsed < 600.0, f"GA experiment took {elapsed:.0f}s"
    assert successes >= 45, \
        f"dividers recovered within 3 px in {successes}/50 runs (need >= 45)"


def test_rotation_sweep_breaks_without_deskew_and_recovers_with(tmp_path_factory):
    out = tmp_path_factory.mktemp("sweep-data")
    manifest = generate_dataset([BASE], 50, out, seed=17)
    angles = list(range(-30, 31, 5))

    start = time.monotonic()
    plain = rotation_sweep(manifest, angles, False)
    deskewed = rotation_sweep(manifest, angles, True)
    elapsed = time.monotonic() - start
    assert elapsed < 900.0, f"sweeps took {elapsed:.0f}s"

    baseline = next(r for r in plain.rows if r.angle == 0.0).error_free_pct
    for row in deskewed.rows:
        assert row.max_abs_residual is not None and row.max_abs_residual < 2.0, \
            f"residual skew {row.max_abs_residual} at {row.angle:+.0f} degrees"
        if abs(row.angle) <= 20.0:
            assert abs(row.error_free_pct - baseline) <= 10.0, \
                (f"deskewed error-free {row.error_free_pct}% at "
                 f"{row.angle:+.0f} degrees vs baseline {baseline}%")

    robust = {r.angle: r.error_free_pct
              for r in plain.rows if abs(r.angle) >= 5.0 and r.error_free_pct > 5.0}
    assert not robust, \
        f"error-free stays above 5% without deskew at angles: {robust}"


def _geno(x0, y0, heights, widths):
    return TableGenotype(
        max_rows=len(heights), max_cols=len(widths),
        origin_x=x0, origin_y=y0,
        row_heights=tuple(heights), col_widths=tuple(widths))


def test_metric_aggregation_matches_hand_computed_values(tmp_path):
    comparisons = [
        # both counts right; origin off (+2, -1); height off 1/32, width 1/4
        compare(_geno(50, 60, (64, 40), (80, 128)),
                _geno(48, 61, (62, 40), (80, 96))),
        # row count wrong by +1
        compare(_geno(50, 60, (40, 50, 60), (80, 90)),
                _geno(50, 60, (40, 110, 0), (80, 90))),
        # column count wrong by -2
        compare(_geno(50, 60, (40, 50), (80, 90)),
                _geno(50, 60, (40, 50), (20, 20, 20, 30))),
        # identical
        compare(_geno(50, 60, (40, 50), (80, 90)),
                _geno(50, 60, (40, 50), (80, 90))),
    ]
    report = aggregate(comparisons, "fixture")
    assert report.n_tables == 4
    assert report.pct_correct_rows == 75.0
    assert report.pct_correct_cols == 75.0
    assert report.avg_row_count_error == 1.0
    assert report.avg_col_count_error == -2.0
    assert report.avg_x0_error == 1.0
    assert report.avg_y0_error == -0.5
    assert report.avg_row_height_rel_error == 0.78125
    assert report.avg_col_width_rel_error == 6.25

    perfect = compare(_geno(0, 0, (40,), (60,)), _geno(0, 0, (40,), (60,)))
    path = tmp_path / "metrics.csv"
    metrics_to_csv([report, aggregate([perfect, perfect], "clean")], path)
    lines = path.read_text().splitlines()
    assert lines[1].split(",") == ["fixture", "4", "75.0", "75.0", "1.0",
                                   "-2.0", "1.0", "-0.5", "0.8", "6.2"]
    clean = lines[2].split(",")
    assert clean[4] == "-" and clean[5] == "-"


def _drive_cli(root: Path) -> dict[str, bytes]:
    """Run every subcommand against a workspace; return output bytes."""
    root.mkdir(parents=True)
    data = root / "data"
    assert run(["gen", "--config", "base", "--count", "2",
                "--seed", "11", "--out", str(data)]) == 0
    skeleton = data / "00000_base.skel.png"

    degraded = root / "degraded.png"
    assert run(["degrade", "--in", str(skeleton), "--out", str(degraded),
                "--seed", "3", "--count", "2:4", "--jitter-sigma", "1.0"]) == 0

    estimate = root / "estimate.json"
    assert run(["estimate", "--skeleton", str(degraded),
                "--out", str(estimate)]) == 0

    refined = root / "refined.json"
    history = root / "history.csv"
    assert run(["optimize", "--skeleton", str(skeleton),
                "--initial", str(estimate), "--out", str(refined),
                "--seed", "5", "--history", str(history),
                "--population-size", "12", "--max-epochs", "6"]) == 0

    rotated = root / "rotated.png"
    rotate(RasterImage.load(skeleton), 9.0).save(rotated)
    upright = root / "upright.png"
    report = root / "report.json"
    assert run(["deskew", "--in", str(rotated), "--out", str(upright),
                "--report", str(report), "--crop", "595x842"]) == 0

    scores = root / "scores.csv"
    assert run(["eval", "--manifest", str(data / "manifest.json"),
                "--csv", str(scores)]) == 0

    sweep_csv = root / "sweep.csv"
    plot = root / "sweep.svg"
    assert run(["sweep", "--manifest", str(data / "manifest.json"),
                "--angles", "-5:5:5", "--deskew", "on",
                "--csv", str(sweep_csv), "--plot", str(plot)]) == 0

    return {str(p.relative_to(root)): p.read_bytes()
            for p in sorted(root.rglob("*")) if p.is_file()}


def test_seeded_cli_commands_are_byte_identical(tmp_path):
    workspace = tmp_path / "workspace"
    first = _drive_cli(workspace)
    shutil.rmtree(workspace)
    second = _drive_cli(workspace)
    assert first.keys() == second.keys()
    different = [name for name in first if first[name] != second[name]]
    assert not different, f"outputs differ between reruns: {different}"


def test_translator_smoke_learns_and_exports_estimable_skeletons(tmp_path):
    pytest.importorskip("torch")
    from PIL import Image

    from skelgan import read_history
    from skelgan.cli import run as skelgan_run

    pairs = tmp_path / "pairs"
    assert run(["gen", "--config", "base", "--count", "40", "--seed", "21",
                "--out", str(pairs)]) == 0

    ckpt = tmp_path / "ckpt"
    assert skelgan_run(["train", "--pairs", str(pairs), "--out", str(ckpt),
                        "--layers", "3", "--epochs", "5", "--seed", "2"]) == 0
    history = read_history(ckpt / "history.csv")
    l1 = [stats.g_l1 for stats in history]
    assert len(l1) == 5
    assert all(later < earlier for earlier, later in zip(l1, l1[1:])), \
        f"generator L1 per epoch not decreasing: {l1}"

    exports = tmp_path / "exports"
    assert skelgan_run(["export", "--ckpt", str(ckpt), "--scans", str(pairs),
                        "--out", str(exports), "--seed", "2"]) == 0
    skeletons = sorted(exports.glob("*.skel.png"))
    assert len(skeletons) == 40
    for path in skeletons:
        img = Image.open(path)
        assert img.size == (256, 256) and img.mode == "L"
        assert run(["estimate", "--skeleton", str(path),
                    "--out", str(exports / (path.name + ".json"))]) == 0, \
            f"estimate failed on {path.name}"
