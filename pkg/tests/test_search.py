import itertools
import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from blockframes._kernels import selection_logdets, selection_logdets_numpy
from blockframes.erasure import BlockModel
from blockframes.errors import InfeasibleError, ValidationError
from blockframes.frames import DifferenceSet, FrameSpec, build_base_matrix, construct_frame
from blockframes.metrics import ChannelParams, average_capacity
from blockframes.search import (
    EXHAUSTIVE_CAP,
    SATURATED,
    CapacityObjective,
    SearchConfig,
    _partition_chunks,
    canonical_partition_count,
    canonicalize,
    search_butf,
    search_petf,
)

pytestmark = pytest.mark.filterwarnings("ignore:K=.*active columns exceed")
CASE = DifferenceSet("binary", 16, (0, 2, 5, 6, 14, 15))
CASE_BLOCKS = BlockModel(4, 4, 2)
CH30 = ChannelParams.from_db(30)


def brute_partitions(n, nv):
    """Set of unordered partitions reached by all n! permutations."""
    seen = set()
    for perm in itertools.permutations(range(n)):
        seen.add(frozenset(frozenset(perm[i : i + nv]) for i in range(0, n, nv)))
    return seen


def test_partition_count_small():
    assert canonical_partition_count(4, 2) == 3
    assert canonical_partition_count(16, 4) == 2_627_625
    assert canonical_partition_count(64, 16) == SATURATED
    for n, nb in [(4, 2), (6, 3), (6, 2), (8, 4)]:
        assert canonical_partition_count(n, nb) == len(brute_partitions(n, n // nb))


@pytest.mark.parametrize("n,nv", [(4, 2), (6, 2), (6, 3), (8, 2), (9, 3), (12, 4)])
def test_partition_generator_complete_and_ordered(n, nv):
    rows = np.concatenate(list(_partition_chunks(n, nv)))
    assert len(rows) == canonical_partition_count(n, n // nv)
    as_tuples = [tuple(r) for r in rows]
    assert as_tuples == sorted(as_tuples)
    assert len(set(as_tuples)) == len(as_tuples)
    for r in rows:
        blocks = r.reshape(-1, nv)
        assert np.all(np.diff(blocks, axis=1) > 0)
        assert np.all(np.diff(blocks[:, 0]) > 0)


def test_partition_generator_count_case_study():
    total = sum(len(c) for c in _partition_chunks(16, 4))
    assert total == 2_627_625


@pytest.mark.parametrize("base,n", [("hadamard", 16), ("dft", 12)])
def test_kernel_matches_numpy(base, n, rng):
    w = build_base_matrix(base, n)
    rows = rng.choice(n, size=5, replace=False)
    a = w[rows] * np.sqrt(n / 5)
    gram = a.conj().T @ a
    cols = np.array([np.sort(rng.choice(n, size=4, replace=False)) for _ in range(50)])
    assert np.allclose(selection_logdets(gram, cols, 100.0),
                       selection_logdets_numpy(gram, cols, 100.0), atol=1e-10)


def test_objective_matches_capacity():
    obj = CapacityObjective("hadamard", CASE_BLOCKS, CH30)
    rng = np.random.default_rng(4)
    for _ in range(5):
        perm = tuple(rng.permutation(16).tolist())
        spec = FrameSpec("hadamard", 16, 6, CASE.elements, perm, CASE_BLOCKS)
        assert obj.of_spec(spec) == pytest.approx(average_capacity(construct_frame(spec), CH30).mean, abs=1e-9)


def test_canonicalize_invariance():
    obj = CapacityObjective("hadamard", CASE_BLOCKS, CH30)
    rng = np.random.default_rng(11)
    for _ in range(1000):
        m = int(rng.integers(1, 16))
        rows = tuple(sorted(rng.choice(16, size=m, replace=False).tolist()))
        spec = FrameSpec("hadamard", 16, m, rows, tuple(rng.permutation(16).tolist()), CASE_BLOCKS)
        canon = canonicalize(spec)
        assert canonicalize(canon) == canon
        assert obj.of_spec(canon) == pytest.approx(obj.of_spec(spec), abs=1e-9)


def _raw_permutation_brute_force(rows, blocks, snr):
    """Best average capacity over all n! column orders, computed directly."""
    n = blocks.n
    w = build_base_matrix("hadamard", n)[list(rows)] * np.sqrt(n / len(rows))
    gram = w.T @ w
    perms = np.array(list(itertools.permutations(range(n))))
    sels = list(itertools.combinations(range(blocks.num_blocks), blocks.active_blocks))
    nv = blocks.block_size
    total = np.zeros(len(perms))
    for sel in sels:
        pos = [b * nv + j for b in sel for j in range(nv)]
        cols = perms[:, pos]
        sub = gram[cols[:, :, None], cols[:, None, :]]
        _, logdet = np.linalg.slogdet(np.eye(len(pos)) + snr * sub)
        total += logdet / math.log(2)
    return (total / len(sels)).max()


@pytest.mark.parametrize("rows", [(0, 3, 5), (1, 2, 4, 7), (0, 1)])
def test_exhaustive_petf_is_optimal_over_raw_permutations(rows):
    blocks = BlockModel(4, 2, 2)
    ch = ChannelParams.from_db(15)
    ds = DifferenceSet("binary", 8, rows)
    res = search_petf("hadamard", ds, blocks, SearchConfig(ch, mode="exhaustive"))
    assert res.evaluations == canonical_partition_count(8, 4) == 105
    assert res.best_objective == pytest.approx(_raw_permutation_brute_force(rows, blocks, ch.snr_linear), abs=1e-9)


def test_exhaustive_butf_small():
    blocks = BlockModel(4, 2, 2)
    ch = ChannelParams.from_db(10)
    res = search_butf("hadamard", blocks, 2, SearchConfig(ch, mode="exhaustive"))
    best = max(_raw_permutation_brute_force(r, blocks, ch.snr_linear)
               for r in itertools.combinations(range(8), 2))
    assert res.best_objective == pytest.approx(best, abs=1e-9)


def test_exhaustive_beyond_cap_is_infeasible():
    ds = DifferenceSet("binary", 64, tuple(range(20)))
    with pytest.raises(InfeasibleError) as info:
        search_petf("hadamard", ds, BlockModel(16, 4, 4), SearchConfig(CH30, mode="exhaustive"))
    assert info.value.size > EXHAUSTIVE_CAP


def test_unit_blocks_return_identity():
    ds = DifferenceSet("binary", 16, CASE.elements)
    res = search_petf("hadamard", ds, BlockModel(16, 1, 6), SearchConfig(CH30))
    assert res.best_spec.perm == tuple(range(16))


def test_stochastic_never_worse_than_canonical():
    obj = CapacityObjective("hadamard", CASE_BLOCKS, CH30)
    canonical = obj(CASE.elements, range(16))
    res = search_petf("hadamard", CASE, CASE_BLOCKS, SearchConfig(CH30, restarts=1, iterations=50))
    assert res.best_objective >= canonical - 1e-12


def test_search_is_deterministic():
    cfg = SearchConfig(CH30, restarts=3, iterations=200, seed=9)
    a = search_butf("hadamard", CASE_BLOCKS, 6, cfg)
    b = search_butf("hadamard", CASE_BLOCKS, 6, cfg)
    c = search_butf("hadamard", CASE_BLOCKS, 6, SearchConfig(CH30, restarts=3, iterations=200, seed=9,
                                                             threads=3))
    assert a.to_dict() == b.to_dict() == c.to_dict()


def test_max_evaluations_budget():
    cfg = SearchConfig(CH30, restarts=2, iterations=10_000, seed=0, max_evaluations=300)
    res = search_petf("hadamard", CASE, CASE_BLOCKS, cfg)
    assert res.evaluations <= 600


def test_checkpoint_resume(tmp_path):
    cfg = SearchConfig(CH30, restarts=3, iterations=300, seed=2)
    straight = search_petf("hadamard", CASE, CASE_BLOCKS, cfg)
    ck = tmp_path / "ck.json"
    search_petf("hadamard", CASE, CASE_BLOCKS, cfg, checkpoint=ck)
    saved = json.loads(ck.read_text())
    assert set(saved) == {"config_hash", "restart_states", "best_spec", "best_objective"}
    saved["restart_states"] = saved["restart_states"][:1]  # simulate an interruption
    ck.write_text(json.dumps(saved))
    resumed = search_petf("hadamard", CASE, CASE_BLOCKS, cfg, checkpoint=ck)
    assert resumed.to_dict() == straight.to_dict()


def test_checkpoint_from_other_config_rejected(tmp_path):
    ck = tmp_path / "ck.json"
    search_petf("hadamard", CASE, CASE_BLOCKS, SearchConfig(CH30, restarts=1, iterations=20), checkpoint=ck)
    with pytest.raises(ValidationError):
        search_petf("hadamard", CASE, CASE_BLOCKS, SearchConfig(CH30, restarts=1, iterations=21), checkpoint=ck)


def test_config_validation():
    with pytest.raises(ValidationError):
        SearchConfig(CH30, mode="greedy")
    with pytest.raises(ValidationError):
        SearchConfig(CH30, neighborhood="blocks")
    with pytest.raises(ValidationError):
        SearchConfig(CH30, restarts=0)


@given(perm=st.permutations(range(16)))
def test_canonicalize_is_a_partition_invariant(perm):
    spec = FrameSpec("hadamard", 16, 6, CASE.elements, tuple(perm), CASE_BLOCKS)
    canon = canonicalize(spec)
    blocks = lambda p: {frozenset(p[i : i + 4]) for i in range(0, 16, 4)}  # noqa: E731
    assert blocks(canon.perm) == blocks(spec.perm)
    firsts = [canon.perm[i] for i in range(0, 16, 4)]
    assert firsts == sorted(firsts) and firsts[0] == 0
