import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from blockframes.erasure import (
    EXACT_LIMIT,
    BlockModel,
    Exhaustive,
    MonteCarlo,
    auto_mode,
    column_indices,
    enumerate_selections,
    num_selections,
    ratios,
    resolve_selections,
    sample_selections,
    selection_array,
    subframe,
    worker_generators,
)
from blockframes.errors import InfeasibleError, ValidationError


def test_parse_and_format():
    b = BlockModel.parse("16:4:4")
    assert (b.num_blocks, b.block_size, b.active_blocks) == (16, 4, 4)
    assert b.n == 64 and b.k == 16 and b.num_erased == 12
    assert str(b) == "16:4:4"
    for bad in ["16:4", "a:b:c", "4:4:5", "0:4:1", "4:-1:2"]:
        with pytest.raises(ValidationError):
            BlockModel.parse(bad)


def test_single_active_block_warns():
    with pytest.warns(UserWarning):
        BlockModel(4, 4, 1)


def test_ratios():
    r = ratios(BlockModel(16, 4, 4), 20)
    assert r.p == 0.25 and r.gamma == pytest.approx(20 / 64) and r.beta == pytest.approx(16 / 20)


def test_enumeration_is_lexicographic():
    sels = list(enumerate_selections(BlockModel(5, 2, 3)))
    assert sels == list(itertools.combinations(range(5), 3))
    arr = selection_array(BlockModel(5, 2, 3))
    assert arr.shape == (10, 3) and arr.dtype == np.int64
    assert [tuple(r) for r in arr] == sels


def test_counts():
    assert num_selections(BlockModel(16, 4, 4)) == 1820
    assert num_selections(BlockModel(4, 4, 2)) == 6


def test_enumeration_refused_above_limit():
    big = BlockModel(40, 1, 20)
    assert num_selections(big) > EXACT_LIMIT
    with pytest.raises(InfeasibleError):
        selection_array(big)
    assert isinstance(auto_mode(big, 100, 1), MonteCarlo)
    assert isinstance(auto_mode(BlockModel(16, 4, 4)), Exhaustive)


def test_column_indices_and_subframe():
    b = BlockModel(4, 3, 2)
    assert list(column_indices(b, (0, 2))) == [0, 1, 2, 6, 7, 8]
    assert list(column_indices(b, (2, 0))) == [0, 1, 2, 6, 7, 8]
    for bad in [(0, 4), (1, 1), (0,)]:
        with pytest.raises(ValidationError):
            column_indices(b, bad)

    class F:
        entries = np.arange(24).reshape(2, 12)
        blocks = b

    assert subframe(F, (1, 3)).shape == (2, 6)


def test_sampling_uniform_chi_square():
    model = BlockModel(6, 1, 3)
    draws = sample_selections(model, np.random.default_rng(7), 1_000_000)
    assert np.all(np.diff(draws, axis=1) > 0)
    # rank each draw through a bitmask lookup table
    table = np.full(64, -1, dtype=np.int64)
    for i, s in enumerate(itertools.combinations(range(6), 3)):
        table[sum(1 << b for b in s)] = i
    ranks = table[(1 << draws).sum(axis=1)]
    assert ranks.min() >= 0
    counts = np.bincount(ranks, minlength=20)
    _, pvalue = stats.chisquare(counts)
    assert pvalue > 1e-3


def test_sampling_is_seeded():
    model = BlockModel(16, 4, 4)
    a = sample_selections(model, np.random.default_rng(3), 500)
    b = sample_selections(model, np.random.default_rng(3), 500)
    assert np.array_equal(a, b)
    g1 = worker_generators(9, 3)
    g2 = worker_generators(9, 3)
    assert [g.random() for g in g1] == [g.random() for g in g2]


def test_resolve_modes():
    b = BlockModel(5, 2, 2)
    assert len(resolve_selections(b)) == math.comb(5, 2)
    assert len(resolve_selections(b, MonteCarlo(17, 0))) == 17
    with pytest.raises(ValidationError):
        resolve_selections(b, MonteCarlo(0, 0))
    with pytest.raises(ValidationError):
        resolve_selections(b, "everything")


@given(nb=st.integers(2, 12), na=st.integers(1, 12), seed=st.integers(0, 2**32 - 1))
def test_samples_are_valid_selections(nb, na, seed):
    na = min(na, nb)
    model = BlockModel(nb, 2, na) if na > 1 else BlockModel(nb, 2, 2 if nb > 1 else 1)
    draws = sample_selections(model, np.random.default_rng(seed), 50)
    assert draws.shape == (50, model.active_blocks)
    assert np.all(draws >= 0) and np.all(draws < nb)
    assert np.all(np.diff(draws, axis=1) > 0)
