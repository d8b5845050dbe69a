"""Genetic-algorithm refinement of a table genotype against a skeleton.

Candidates are rendered as skeletons and scored by normalized pixel
disagreement with the target image, so a perfect reconstruction scores
zero.  Mutation perturbs origin and extents with Gaussian steps and
occasionally restructures a dimension (split, merge or drop a
row/column); crossover recombines the horizontal layout of one parent
with the vertical layout of another.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import (
    CANVAS,
    GAError,
    RasterImage,
    TableGenotype,
    validate_genotype,
)
from .render import BLURRY, BorderStyle, render_skeleton
from .xycut import to_luminance


@dataclass(frozen=True)
class GAParams:
    """Evolution knobs; defaults are the tuned operating point."""

    population_size: int = 50
    elitism: bool = True
    reproduce_frac: float = 0.70
    numeric_mutation_prob: float = 0.1
    numeric_mutation_sigma: float = 5.0
    structural_mutation_prob: float = 0.1
    structural_op_weights: tuple[float, float, float] = (0.03, 0.03, 0.03)
    convergence_epsilon: float = 0.01
    convergence_window: int = 3
    max_epochs: int = 200
    seed: int = 0


# ---------------------------------------------------------------------------
# fitness
# ---------------------------------------------------------------------------


def overlap_score(candidate: np.ndarray, target: np.ndarray) -> float:
    """Normalized pixel disagreement between two images in [0, 1] scale.

    Both arrays hold intensities scaled to [0, 1] with 0 = black.  The
    L1 difference is divided by the ink mass of each image (sum of
    1 - pixel), so the score is 0 only for identical images and grows
    when ink is misplaced.
    """
    candidate = np.asarray(candidate, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if candidate.shape != target.shape:
        raise GAError(
            f"image shape mismatch: {candidate.shape} vs {target.shape}")
    ink_c = (1.0 - candidate).sum()
    ink_t = (1.0 - target).sum()
    if ink_c == 0.0 or ink_t == 0.0:
        raise GAError("degenerate all-white image in fitness evaluation")
    return float(np.abs(target - candidate).sum() / (ink_c * ink_t))


def fitness(candidate: TableGenotype, target: RasterImage,
            style: BorderStyle = BLURRY) -> float:
    """Score a candidate genotype against a target skeleton image."""
    rendered = render_skeleton(candidate, style,
                               canvas=(target.width, target.height))
    t = to_luminance(target).pixels.astype(np.float64) / 255.0
    c = rendered.pixels.astype(np.float64) / 255.0
    return overlap_score(c, t)


# ---------------------------------------------------------------------------
# operators
# ---------------------------------------------------------------------------


def _as_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def _perturb_extents(extents: list[int], rng: np.random.Generator,
                     p: GAParams, origin: int, limit: int) -> None:
    """Gaussian-perturb extents in place, keeping the grid on canvas."""
    for i in range(len(extents)):
        if rng.random() >= p.numeric_mutation_prob:
            continue
        step = int(round(rng.normal(0.0, p.numeric_mutation_sigma)))
        new = max(0, extents[i] + step)
        overflow = origin + sum(extents) - extents[i] + new - limit
        if overflow > 0:
            new = max(0, new - overflow)
        extents[i] = new


def _split_largest(extents: list[int]) -> None:
    """Add one entry by splitting the largest extent into a zero slot."""
    zeros = [i for i, v in enumerate(extents) if v == 0]
    positives = [(v, i) for i, v in enumerate(extents) if v > 0]
    if not zeros or not positives:
        return
    largest, idx = max(positives)
    if largest < 2:
        return
    z = zeros[-1]
    extents.pop(z)
    if z < idx:
        idx -= 1
    extents[idx] = largest // 2
    extents.insert(idx + 1, largest - largest // 2)


def _merge_adjacent(extents: list[int], rng: np.random.Generator) -> None:
    """Merge a random adjacent pair of present entries."""
    present = [i for i, v in enumerate(extents) if v > 0]
    if len(present) < 2:
        return
    k = int(rng.integers(0, len(present) - 1))
    a, b = present[k], present[k + 1]
    extents[a] += extents[b]
    extents[b] = 0


def _remove_smallest(extents: list[int]) -> None:
    """Drop the smallest present entry (ties resolve to the first)."""
    present = [(v, i) for i, v in enumerate(extents) if v > 0]
    if len(present) < 2:
        return
    _, idx = min(present)
    extents[idx] = 0


def _structural(extents: list[int], rng: np.random.Generator,
                p: GAParams) -> None:
    if rng.random() >= p.structural_mutation_prob:
        return
    weights = np.asarray(p.structural_op_weights, dtype=np.float64)
    total = weights.sum()
    if total <= 0:
        return
    op = rng.choice(3, p=weights / total)
    if op == 0:
        _split_largest(extents)
    elif op == 1:
        _merge_adjacent(extents, rng)
    else:
        _remove_smallest(extents)


def mutate(g: TableGenotype, p: GAParams, seed,
           canvas: tuple[int, int] = CANVAS) -> TableGenotype:
    """Mutated copy of a genotype; the result is always canvas-valid.

    Each of origin_x, origin_y and every extent entry is independently
    perturbed with probability numeric_mutation_prob by a rounded
    Gaussian step (numeric_mutation_sigma px), clamped to non-negative
    values and canvas containment.  Each dimension then undergoes one
    structural operation (split largest / merge adjacent / drop
    smallest, weighted by structural_op_weights) with probability
    structural_mutation_prob.  ``seed`` may be an int or a Generator.
    """
    rng = _as_rng(seed)
    canvas_w, canvas_h = canvas
    heights = list(g.row_heights)
    widths = list(g.col_widths)
    x0, y0 = g.origin_x, g.origin_y

    if rng.random() < p.numeric_mutation_prob:
        step = int(round(rng.normal(0.0, p.numeric_mutation_sigma)))
        x0 = min(max(0, x0 + step), max(0, canvas_w - 2 - sum(widths)))
    if rng.random() < p.numeric_mutation_prob:
        step = int(round(rng.normal(0.0, p.numeric_mutation_sigma)))
        y0 = min(max(0, y0 + step), max(0, canvas_h - 2 - sum(heights)))
    _perturb_extents(heights, rng, p, y0, canvas_h - 2)
    _perturb_extents(widths, rng, p, x0, canvas_w - 2)
    _structural(heights, rng, p)
    _structural(widths, rng, p)

    return TableGenotype(
        max_rows=g.max_rows, max_cols=g.max_cols,
        origin_x=x0, origin_y=y0,
        row_heights=tuple(heights), col_widths=tuple(widths),
    )


def crossover(parent_a: TableGenotype, parent_b: TableGenotype) -> TableGenotype:
    """Child taking horizontal layout from parent_a, vertical from parent_b.

    origin_x and col_widths come from parent_a; origin_y and
    row_heights from parent_b.  Parents must declare equal maxima.
    """
    if (parent_a.max_rows, parent_a.max_cols) != (parent_b.max_rows, parent_b.max_cols):
        raise GAError(
            "crossover cardinality mismatch: "
            f"{(parent_a.max_rows, parent_a.max_cols)} vs "
            f"{(parent_b.max_rows, parent_b.max_cols)}")
    return TableGenotype(
        max_rows=parent_a.max_rows, max_cols=parent_a.max_cols,
        origin_x=parent_a.origin_x, origin_y=parent_b.origin_y,
        row_heights=parent_b.row_heights, col_widths=parent_a.col_widths,
    )


# ---------------------------------------------------------------------------
# evolution loop
# ---------------------------------------------------------------------------


def has_converged(history: list[float], epsilon: float, window: int) -> bool:
    """True when the last ``window`` epoch-to-epoch relative improvements
    of best fitness all stay below ``epsilon``."""
    if len(history) < window + 1:
        return False
    recent = history[-(window + 1):]
    for before, after in zip(recent, recent[1:]):
        improvement = (before - after) / before if before > 0 else 0.0
        if improvement >= epsilon:
            return False
    return True


def _rank_weights(n: int) -> np.ndarray:
    w = np.arange(n, 0, -1, dtype=np.float64)
    return w / w.sum()


def evolve(initial: TableGenotype, target: RasterImage, p: GAParams,
           style: BorderStyle = BLURRY) -> tuple[TableGenotype, list[float]]:
    """Refine ``initial`` against ``target``; returns (best, history).

    The population starts from the initial genotype plus mutated
    copies.  Each epoch keeps the best individual unchanged (elitism),
    fills reproduce_frac of the remaining slots with mutated survivors
    chosen by linear fitness rank, and the rest with crossover of two
    rank-selected parents.  history holds the best fitness per epoch;
    evolution stops at max_epochs or once has_converged fires.
    """
    canvas = (target.width, target.height)
    result = validate_genotype(initial, *canvas)
    if not result:
        raise GAError(f"invalid initial genotype: {result.reason}")
    if p.population_size < 2:
        raise GAError("population_size must be at least 2")
    target_gray = to_luminance(target).pixels.astype(np.float64) / 255.0
    if (1.0 - target_gray).sum() == 0.0:
        raise GAError("degenerate target: image is entirely white")

    cache: dict[TableGenotype, float] = {}

    def score(candidate: TableGenotype) -> float:
        cached = cache.get(candidate)
        if cached is None:
            rendered = render_skeleton(candidate, style, canvas)
            cached = overlap_score(rendered.pixels.astype(np.float64) / 255.0,
                                   target_gray)
            cache[candidate] = cached
        return cached

    rng = np.random.default_rng(p.seed)
    population = [initial]
    population += [mutate(initial, p, rng, canvas)
                   for _ in range(p.population_size - 1)]

    history: list[float] = []
    best = initial
    weights = _rank_weights(p.population_size)
    for _epoch in range(p.max_epochs):
        scores = np.array([score(ind) for ind in population])
        order = np.argsort(scores, kind="stable")
        ranked = [population[i] for i in order]
        best = ranked[0]
        history.append(float(scores[order[0]]))
        if has_converged(history, p.convergence_epsilon, p.convergence_window):
            break

        next_pop: list[TableGenotype] = [best] if p.elitism else []
        open_slots = p.population_size - len(next_pop)
        n_reproduce = int(round(p.reproduce_frac * open_slots))
        for _ in range(n_reproduce):
            parent = ranked[int(rng.choice(p.population_size, p=weights))]
            next_pop.append(mutate(parent, p, rng, canvas))
        for _ in range(open_slots - n_reproduce):
            a = ranked[int(rng.choice(p.population_size, p=weights))]
            b = ranked[int(rng.choice(p.population_size, p=weights))]
            next_pop.append(crossover(a, b))
        population = next_pop
    return best, history
