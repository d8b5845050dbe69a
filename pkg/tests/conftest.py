"""Shared fixtures: a small known genotype and its rendered skeletons."""

import pytest

from tablegrid import BLURRY, SOLID, TableGenotype, render_skeleton


@pytest.fixture
def small_genotype():
    # 2x3 grid well inside the default canvas
    return TableGenotype(
        max_rows=2, max_cols=3,
        origin_x=60, origin_y=80,
        row_heights=(50, 70),
        col_widths=(80, 90, 100),
    )


@pytest.fixture
def solid_skeleton(small_genotype):
    return render_skeleton(small_genotype, SOLID)


@pytest.fixture
def blurry_skeleton(small_genotype):
    return render_skeleton(small_genotype, BLURRY)
