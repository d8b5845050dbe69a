"""Evaluation harness: per-table comparison, aggregates, rotation sweeps.

Errors are signed as true minus predicted.  Count-error averages run
only over tables whose count was wrong; origin and extent errors are
recorded only for tables with both counts correct, and their averages
run over that subset.  Cells with no qualifying tables render as "-"
in CSV output.
"""

from __future__ import annotations

import csv
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from .deskew import (
    DEFAULT_MAX_ANGLE,
    DEFAULT_PASSES,
    crop_center,
    deskew_iterative,
    rotate,
)
from .model import EstimationError, RasterImage, TableGenotype, TablegridError
from .render import DatasetManifest, worker_count
from .xycut import estimate_structure


# ---------------------------------------------------------------------------
# per-table comparison
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TableComparison:
    """Outcome of comparing a prediction against ground truth."""

    row_count_correct: bool
    col_count_correct: bool
    row_count_error: int
    col_count_error: int
    x0_error: int | None
    y0_error: int | None
    row_height_rel_errors: tuple[float, ...] | None
    col_width_rel_errors: tuple[float, ...] | None

    @property
    def error_free(self) -> bool:
        return self.row_count_correct and self.col_count_correct


def compare(truth: TableGenotype, predicted: TableGenotype) -> TableComparison:
    """Compare effective structure; extent errors need both counts right."""
    rows_ok = truth.effective_rows == predicted.effective_rows
    cols_ok = truth.effective_cols == predicted.effective_cols
    x0_error = y0_error = None
    height_rel = width_rel = None
    if rows_ok and cols_ok:
        x0_error = truth.origin_x - predicted.origin_x
        y0_error = truth.origin_y - predicted.origin_y
        height_rel = tuple(
            (t - p) / t for t, p in zip(truth.positive_heights(),
                                        predicted.positive_heights()))
        width_rel = tuple(
            (t - p) / t for t, p in zip(truth.positive_widths(),
                                        predicted.positive_widths()))
    return TableComparison(
        row_count_correct=rows_ok,
        col_count_correct=cols_ok,
        row_count_error=truth.effective_rows - predicted.effective_rows,
        col_count_error=truth.effective_cols - predicted.effective_cols,
        x0_error=x0_error,
        y0_error=y0_error,
        row_height_rel_errors=height_rel,
        col_width_rel_errors=width_rel,
    )


# ---------------------------------------------------------------------------
# aggregation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MetricsReport:
    """Aggregate metrics for one table family.

    Percent-of-correct counts run over all tables.  Count-error
    averages run over miscounted tables only and are None when every
    count was right.  Origin and extent averages run over tables with
    both counts correct (None when there are none); extent averages
    are in percent.
    """

    config_name: str
    n_tables: int
    pct_correct_rows: float
    pct_correct_cols: float
    avg_row_count_error: float | None
    avg_col_count_error: float | None
    avg_x0_error: float | None
    avg_y0_error: float | None
    avg_row_height_rel_error: float | None
    avg_col_width_rel_error: float | None


def _mean(values) -> float | None:
    values = list(values)
    return sum(values) / len(values) if values else None


def aggregate(comparisons, config_name: str = "") -> MetricsReport:
    """Reduce per-table comparisons to a MetricsReport."""
    comparisons = list(comparisons)
    if not comparisons:
        raise TablegridError("cannot aggregate zero comparisons")
    n = len(comparisons)
    both_ok = [c for c in comparisons if c.error_free]
    height_errors = [e for c in both_ok for e in c.row_height_rel_errors]
    width_errors = [e for c in both_ok for e in c.col_width_rel_errors]
    avg_height = _mean(height_errors)
    avg_width = _mean(width_errors)
    return MetricsReport(
        config_name=config_name,
        n_tables=n,
        pct_correct_rows=100.0 * sum(c.row_count_correct for c in comparisons) / n,
        pct_correct_cols=100.0 * sum(c.col_count_correct for c in comparisons) / n,
        avg_row_count_error=_mean(c.row_count_error for c in comparisons
                                  if not c.row_count_correct),
        avg_col_count_error=_mean(c.col_count_error for c in comparisons
                                  if not c.col_count_correct),
        avg_x0_error=_mean(c.x0_error for c in both_ok),
        avg_y0_error=_mean(c.y0_error for c in both_ok),
        avg_row_height_rel_error=100.0 * avg_height if avg_height is not None else None,
        avg_col_width_rel_error=100.0 * avg_width if avg_width is not None else None,
    )


_METRICS_COLUMNS = (
    "config", "n_tables", "pct_correct_rows", "pct_correct_cols",
    "avg_row_count_error", "avg_col_count_error",
    "avg_x0_error", "avg_y0_error",
    "avg_row_height_rel_error_pct", "avg_col_width_rel_error_pct",
)


def _cell(value) -> str:
    if value is None:
        return "-"
    return f"{value:.1f}"


def metrics_to_csv(reports, path: str | Path) -> None:
    """Write one CSV row per MetricsReport; absent averages become '-'."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_METRICS_COLUMNS)
        for r in reports:
            writer.writerow([
                r.config_name, r.n_tables,
                _cell(r.pct_correct_rows), _cell(r.pct_correct_cols),
                _cell(r.avg_row_count_error), _cell(r.avg_col_count_error),
                _cell(r.avg_x0_error), _cell(r.avg_y0_error),
                _cell(r.avg_row_height_rel_error), _cell(r.avg_col_width_rel_error),
            ])


def evaluate_manifest(manifest: DatasetManifest) -> list[MetricsReport]:
    """Estimate every skeleton in a manifest and aggregate per config."""
    groups: dict[str, list[TableComparison]] = {}
    for entry in manifest.entries:
        truth = TableGenotype.load(manifest.resolve(entry.genotype_path))
        skeleton = RasterImage.load(manifest.resolve(entry.skeleton_path))
        predicted = _estimate_or_none(skeleton)
        groups.setdefault(entry.config_name, []).append(
            _compare_or_miss(truth, predicted))
    return [aggregate(comps, name) for name, comps in sorted(groups.items())]


def _estimate_or_none(img: RasterImage) -> TableGenotype | None:
    try:
        return estimate_structure(img)
    except EstimationError:
        return None


def _compare_or_miss(truth: TableGenotype,
                     predicted: TableGenotype | None) -> TableComparison:
    if predicted is not None:
        return compare(truth, predicted)
    # estimation failure: counts are wrong by the full cardinality
    return TableComparison(
        row_count_correct=False, col_count_correct=False,
        row_count_error=truth.effective_rows,
        col_count_error=truth.effective_cols,
        x0_error=None, y0_error=None,
        row_height_rel_errors=None, col_width_rel_errors=None,
    )


# ---------------------------------------------------------------------------
# rotation sweep
# ---------------------------------------------------------------------------


def pixel_error(truth: TableGenotype,
                predicted: TableGenotype | None) -> float:
    """Average extent error in pixels, rows plus columns.

    Extents pair up index-wise; unmatched extents on either side count
    in full, and each axis normalizes by the larger cardinality.  With
    equal counts this is the mean absolute height error plus the mean
    absolute width error; for a completely missed table it approaches
    the average cell height plus the average cell width.
    """

    def axis_error(true_ext, pred_ext) -> float:
        k = min(len(true_ext), len(pred_ext))
        total = sum(abs(t - p) for t, p in zip(true_ext[:k], pred_ext[:k]))
        total += sum(true_ext[k:]) + sum(pred_ext[k:])
        return total / max(len(true_ext), len(pred_ext), 1)

    pred_heights = predicted.positive_heights() if predicted else ()
    pred_widths = predicted.positive_widths() if predicted else ()
    return (axis_error(truth.positive_heights(), pred_heights)
            + axis_error(truth.positive_widths(), pred_widths))


@dataclass(frozen=True)
class SweepRow:
    angle: float
    deskew_enabled: bool
    error_free_pct: float
    pixel_error: float
    max_abs_residual: float | None  # deskew runs only


@dataclass(frozen=True)
class SweepReport:
    rows: tuple[SweepRow, ...]


def _sweep_entry(task) -> tuple[bool, float, float | None]:
    (skeleton_path, genotype_path, angle, deskew_enabled,
     passes, max_angle, canvas) = task
    truth = TableGenotype.load(genotype_path)
    img = RasterImage.load(skeleton_path)
    residual = None
    if angle != 0.0:
        img = rotate(img, angle)
    if deskew_enabled:
        img, report = deskew_iterative(img, passes, max_angle)
        img = crop_center(img, *canvas)
        residual = report.residual_angle
    predicted = _estimate_or_none(img)
    comparison = _compare_or_miss(truth, predicted)
    return comparison.error_free, pixel_error(truth, predicted), residual


def rotation_sweep(manifest: DatasetManifest, angles, deskew_enabled: bool,
                   *, passes: int = DEFAULT_PASSES,
                   max_angle: float = DEFAULT_MAX_ANGLE,
                   workers: int | None = None) -> SweepReport:
    """Rotate every skeleton by each angle, optionally deskew, estimate.

    Per angle, reports the percentage of error-free tables (both counts
    correct) and the mean pixel_error; deskew runs also report the
    largest absolute residual skew.
    """
    if not manifest.entries:
        raise TablegridError("cannot sweep an empty manifest")
    rows = []
    n_workers = worker_count(workers)
    for angle in angles:
        tasks = [
            (str(manifest.resolve(e.skeleton_path)),
             str(manifest.resolve(e.genotype_path)),
             float(angle), deskew_enabled, passes, max_angle,
             tuple(manifest.canvas))
            for e in manifest.entries
        ]
        if n_workers > 1 and len(tasks) > 1:
            with ProcessPoolExecutor(max_workers=n_workers) as pool:
                results = list(pool.map(_sweep_entry, tasks, chunksize=4))
        else:
            results = [_sweep_entry(t) for t in tasks]
        n = len(results)
        residuals = [r[2] for r in results if r[2] is not None]
        rows.append(SweepRow(
            angle=float(angle),
            deskew_enabled=deskew_enabled,
            error_free_pct=100.0 * sum(r[0] for r in results) / n,
            pixel_error=sum(r[1] for r in results) / n,
            max_abs_residual=max(abs(r) for r in residuals) if residuals else None,
        ))
    return SweepReport(rows=tuple(rows))


def sweep_to_csv(report: SweepReport, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("angle", "deskew_enabled", "error_free_pct", "pixel_error"))
        for row in report.rows:
            writer.writerow([
                f"{row.angle:g}",
                "true" if row.deskew_enabled else "false",
                f"{row.error_free_pct:.1f}",
                f"{row.pixel_error:.1f}",
            ])


# ---------------------------------------------------------------------------
# sweep plot
# ---------------------------------------------------------------------------

_SVG_W, _SVG_H, _SVG_PAD = 480, 260, 42


def _polyline(points, color: str) -> str:
    coords = " ".join(f"{x:.1f},{y:.1f}" for x, y in points)
    return (f'<polyline fill="none" stroke="{color}" stroke-width="1.5" '
            f'points="{coords}"/>')


def _panel(rows, value, label: str, color: str, y_off: int) -> list[str]:
    xs = [r.angle for r in rows]
    vs = [value(r) for r in rows]
    x_lo, x_hi = min(xs), max(xs)
    v_hi = max(max(vs), 1e-9)
    span_x = max(x_hi - x_lo, 1e-9)
    plot_w = _SVG_W - 2 * _SVG_PAD
    plot_h = _SVG_H - 2 * _SVG_PAD

    def to_xy(a, v):
        px = _SVG_PAD + (a - x_lo) / span_x * plot_w
        py = y_off + _SVG_H - _SVG_PAD - v / v_hi * plot_h
        return px, py

    parts = [
        f'<rect x="{_SVG_PAD}" y="{y_off + _SVG_PAD}" width="{plot_w}" '
        f'height="{plot_h}" fill="none" stroke="#888"/>',
        f'<text x="{_SVG_PAD}" y="{y_off + _SVG_PAD - 8}" '
        f'font-size="12">{label}</text>',
        _polyline([to_xy(a, v) for a, v in zip(xs, vs)], color),
    ]
    for a, v in zip(xs, vs):
        px, py = to_xy(a, v)
        parts.append(f'<circle cx="{px:.1f}" cy="{py:.1f}" r="2" fill="{color}"/>')
    parts.append(
        f'<text x="{_SVG_PAD}" y="{y_off + _SVG_H - _SVG_PAD + 16}" '
        f'font-size="10">angle {x_lo:g}..{x_hi:g}, max {v_hi:.1f}</text>')
    return parts


def sweep_to_svg(report: SweepReport, path: str | Path) -> None:
    """Two stacked line plots: error-free % and pixel error vs angle."""
    rows = sorted(report.rows, key=lambda r: r.angle)
    body = _panel(rows, lambda r: r.error_free_pct, "error-free %", "#1965b0", 0)
    body += _panel(rows, lambda r: r.pixel_error, "pixel error", "#dc050c", _SVG_H)
    svg = "\n".join(
        [f'<svg xmlns="http://www.w3.org/2000/svg" width="{_SVG_W}" '
         f'height="{2 * _SVG_H}" viewBox="0 0 {_SVG_W} {2 * _SVG_H}">']
        + body + ["</svg>", ""])
    Path(path).write_text(svg)
