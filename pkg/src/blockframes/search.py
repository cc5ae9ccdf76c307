"""Search for block-erasure optimized frames.

The average capacity depends on a column permutation only through the
induced unordered partition of columns into blocks, so exhaustive search
walks canonical partitions: each block sorted, blocks ordered by their
smallest column. Larger instances use seeded simulated annealing over
column swaps between blocks (and row swaps for free row sets), followed by
a first-improvement descent.
"""

from __future__ import annotations

import hashlib
import itertools
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .erasure import BlockModel, MonteCarlo, num_selections, resolve_selections, EXACT_LIMIT
from ._kernels import selection_logdets
from .errors import InfeasibleError, ValidationError
from .frames import Base, DifferenceSet, FrameSpec, build_base_matrix, group_for
from .metrics import ChannelParams

log = logging.getLogger(__name__)

EXHAUSTIVE_CAP = 10**7
SATURATED = 2**63
TIE_TOL = 1e-12


def canonical_partition_count(n: int, num_blocks: int) -> int:
    """Number of ways to split ``n`` columns into ``num_blocks`` unlabeled equal blocks.

    Saturates at :data:`SATURATED` (``2**63``).
    """
    if num_blocks < 1 or n % num_blocks:
        raise ValidationError(f"N={n} is not divisible by N_B={num_blocks}")
    nv = n // num_blocks
    count = math.factorial(n) // (math.factorial(nv) ** num_blocks * math.factorial(num_blocks))
    return min(count, SATURATED)


def format_size(count: int) -> str:
    return "at least 2**63" if count >= SATURATED else str(count)


def canonicalize(spec: FrameSpec) -> FrameSpec:
    nv = spec.blocks.block_size
    blocks = [sorted(spec.perm[i : i + nv]) for i in range(0, spec.n, nv)]
    blocks.sort(key=lambda b: b[0])
    return spec.with_perm(tuple(itertools.chain.from_iterable(blocks)))


def spec_key(spec: FrameSpec):
    return (tuple(sorted(spec.rows)), spec.perm)


# ---------------------------------------------------------------------------
# configuration and results


@dataclass(frozen=True)
class SearchConfig:
    channel: ChannelParams
    mode: str = "stochastic"  # "exhaustive" | "stochastic"
    restarts: int = 4
    iterations: int = 2000
    seed: int = 0
    neighborhood: Optional[str] = None  # "column" | "row" | "both"; None picks per search
    t0: float = 1.0
    cooling: float = 0.995
    descent: bool = True
    max_evaluations: Optional[int] = None
    mc_count: int = 10_000  # selections per objective when enumeration is too large
    threads: int = 1
    objective: str = "average_capacity"

    def __post_init__(self):
        if self.mode not in ("exhaustive", "stochastic"):
            raise ValidationError(f"unknown search mode {self.mode!r}")
        if self.neighborhood not in (None, "column", "row", "both"):
            raise ValidationError(f"unknown neighborhood {self.neighborhood!r}")
        if self.objective != "average_capacity":
            raise ValidationError("only the average capacity objective is supported")
        if self.restarts < 1 or self.iterations < 0:
            raise ValidationError("restarts must be >= 1 and iterations >= 0")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["channel"] = {"snr_db": self.channel.snr_db}
        d.pop("threads")  # results do not depend on it
        return d


@dataclass
class SearchResult:
    best_spec: FrameSpec
    best_objective: float
    trace: list = field(default_factory=list)
    evaluations: int = 0
    restart_objectives: list = field(default_factory=list)
    space_size: Optional[int] = None

    def to_dict(self) -> dict:
        return {
            "best_spec": spec_to_dict(self.best_spec),
            "best_objective": self.best_objective,
            "evaluations": self.evaluations,
            "restart_objectives": self.restart_objectives,
            "space_size": self.space_size,
            "trace": [list(t) for t in self.trace],
        }


def spec_to_dict(spec: FrameSpec) -> dict:
    return {
        "base": spec.base.value,
        "N": spec.n,
        "M": spec.m,
        "rows": list(spec.rows),
        "perm": list(spec.perm),
        "blocks": str(spec.blocks),
    }


def spec_from_dict(d: dict) -> FrameSpec:
    return FrameSpec(
        d["base"], d["N"], d["M"], tuple(d["rows"]), tuple(d["perm"]), BlockModel.parse(d["blocks"])
    )


def config_hash(payload: dict) -> str:
    text = json.dumps(payload, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(text.encode()).hexdigest()[:16]


# ---------------------------------------------------------------------------
# objective evaluation


class CapacityObjective:
    """Average capacity of row-selected, column-permuted frames of one base matrix.

    Per-selection capacities are ``log2 det(I + SNR * G)`` with ``G`` the
    ``K x K`` Gram of the surviving columns, which equals the eigenvalue sum
    of the capacity definition.
    """

    def __init__(self, base: Base, blocks: BlockModel, channel: ChannelParams,
                 selections: Optional[np.ndarray] = None, mc_count: int = 10_000, seed: int = 0):
        self.base = Base(base)
        self.blocks = blocks
        self.snr = channel.snr_linear
        self.w = build_base_matrix(self.base, blocks.n)
        if selections is None:
            mode = None if num_selections(blocks) <= EXACT_LIMIT else MonteCarlo(mc_count, seed)
            selections = resolve_selections(blocks, mode)
        self.selections = np.asarray(selections, dtype=np.int64)
        nv = blocks.block_size
        self.sel_columns = (
            self.selections[:, :, None] * nv + np.arange(nv)
        ).reshape(len(self.selections), -1)
        contains = np.zeros((blocks.num_blocks, len(self.selections)), dtype=bool)
        for j in range(self.selections.shape[1]):
            contains[self.selections[:, j], np.arange(len(self.selections))] = True
        self.contains = contains

    def rows_gram(self, rows) -> np.ndarray:
        """``N x N`` Gram of the unit-norm frame on ``rows``, identity column order."""
        rows = list(rows)
        a = self.w[rows] * np.sqrt(self.blocks.n / len(rows))
        g = a.conj().T @ a
        return (g + g.conj().T) / 2

    def selection_values(self, gram: np.ndarray, which=None) -> np.ndarray:
        """Per-selection capacities for a frame whose column-order Gram is ``gram``."""
        cols = self.sel_columns if which is None else self.sel_columns[which]
        return selection_logdets(gram, cols, self.snr)

    def __call__(self, rows, perm) -> float:
        perm = list(perm)
        gram = self.rows_gram(rows)[np.ix_(perm, perm)]
        return float(np.mean(self.selection_values(gram)))

    def of_spec(self, spec: FrameSpec) -> float:
        return self(spec.rows, spec.perm)


# ---------------------------------------------------------------------------
# exhaustive search


def _partition_chunks(n: int, nv: int, chunk_first_levels: int = 1):
    """Yield ``(P, n)`` arrays of canonical partitions in lexicographic order.

    Each row lists the blocks back to back; row order is the lexicographic
    order of the resulting permutation vectors.
    """
    num_blocks = n // nv

    def expand(blocks, remaining):
        # blocks: (P, used) columns so far; remaining: (P, r) sorted leftovers
        r = remaining.shape[1]
        combos = np.array(list(itertools.combinations(range(1, r), nv - 1)), dtype=np.int64)
        combos = combos.reshape(len(combos), nv - 1)
        comp = np.array(
            [[i for i in range(1, r) if i not in set(c)] for c in combos], dtype=np.int64
        ).reshape(len(combos), r - nv)
        p, c = remaining.shape[0], len(combos)
        first = np.repeat(remaining[:, :1], c, axis=0)
        rest = remaining[:, combos].reshape(p * c, nv - 1)
        new_block = np.concatenate([first, rest], axis=1)
        new_remaining = remaining[:, comp].reshape(p * c, r - nv)
        new_blocks = np.concatenate([np.repeat(blocks, c, axis=0), new_block], axis=1)
        return new_blocks, new_remaining

    start = (np.zeros((1, 0), dtype=np.int64), np.arange(n, dtype=np.int64)[None, :])
    heads = [start]
    for _ in range(min(chunk_first_levels, num_blocks)):
        heads = [expand(*h) for h in heads]
        heads = [
            (b[i : i + 1], rem[i : i + 1]) for b, rem in heads for i in range(b.shape[0])
        ]
    for blocks, remaining in heads:
        while remaining.shape[1] > 0:
            blocks, remaining = expand(blocks, remaining)
        yield blocks


class _UnionCache:
    """Per-selection capacity keyed by the bitmask of surviving columns."""

    def __init__(self, objective: CapacityObjective, gram: np.ndarray):
        self.objective = objective
        self.gram = gram
        self.keys = np.zeros(0, dtype=np.int64)
        self.values = np.zeros(0)

    def lookup(self, masks: np.ndarray) -> np.ndarray:
        uniq, inverse = np.unique(masks, return_inverse=True)
        known = np.isin(uniq, self.keys, assume_unique=True)
        missing = uniq[~known]
        if missing.size:
            n = self.gram.shape[0]
            bits = ((missing[:, None] >> np.arange(n)) & 1).astype(bool)
            cols = np.array([np.flatnonzero(b) for b in bits])
            vals = selection_logdets(self.gram, cols, self.objective.snr)
            keys = np.concatenate([self.keys, missing])
            values = np.concatenate([self.values, vals])
            order = np.argsort(keys, kind="stable")
            self.keys, self.values = keys[order], values[order]
        return self.values[np.searchsorted(self.keys, uniq)][inverse.reshape(masks.shape)]


def _exhaustive_over_partitions(objective: CapacityObjective, rows):
    """Best canonical partition for fixed rows: ``(objective, perm, count)``."""
    blocks = objective.blocks
    n, nv = blocks.n, blocks.block_size
    if n > 62:
        raise InfeasibleError("exhaustive search supports at most 62 columns", size=None)
    cache = _UnionCache(objective, objective.rows_gram(rows))
    sel = objective.selections
    best_val, best_perm, count = -np.inf, None, 0
    weights = np.int64(1) << np.arange(n, dtype=np.int64)
    for chunk in _partition_chunks(n, nv):
        count += len(chunk)
        block_cols = chunk.reshape(len(chunk), blocks.num_blocks, nv)
        block_masks = weights[block_cols].sum(axis=2)  # (P, NB)
        unions = np.bitwise_or.reduce(block_masks[:, sel], axis=2)  # (P, nsel)
        vals = cache.lookup(unions).mean(axis=1)
        top = vals.max()
        if top > best_val + TIE_TOL:
            idx = int(np.flatnonzero(vals >= top - TIE_TOL)[0])
            best_val, best_perm = float(vals[idx]), tuple(int(c) for c in chunk[idx])
    return best_val, best_perm, count


# ---------------------------------------------------------------------------
# simulated annealing


class _Chain:
    """Mutable search state with incremental objective updates."""

    def __init__(self, objective: CapacityObjective, rows, perm):
        self.obj = objective
        self.rows = list(rows)
        self.perm = np.array(perm, dtype=np.int64)
        self._refresh()

    def _refresh(self):
        self.gram = self.obj.rows_gram(self.rows)[np.ix_(self.perm, self.perm)]
        self.values = self.obj.selection_values(self.gram)
        self.value = float(np.mean(self.values))

    def spec(self, template: FrameSpec) -> FrameSpec:
        return FrameSpec(template.base, template.n, template.m, tuple(sorted(self.rows)),
                         tuple(int(p) for p in self.perm), template.blocks)

    def _swap_positions(self, i, j):
        self.perm[[i, j]] = self.perm[[j, i]]
        self.gram[[i, j], :] = self.gram[[j, i], :]
        self.gram[:, [i, j]] = self.gram[:, [j, i]]

    def try_column_swap(self, i: int, j: int) -> float:
        """Swap frame positions ``i`` and ``j``; return the new objective (state updated)."""
        nv = self.obj.blocks.block_size
        self._undo = ("col", i, j, self.values, self.value)
        self._swap_positions(i, j)
        # selections holding both blocks keep the same column set
        affected = np.flatnonzero(self.obj.contains[i // nv] ^ self.obj.contains[j // nv])
        values = self.values.copy()
        values[affected] = self.obj.selection_values(self.gram, affected)
        self.values, self.value = values, float(np.mean(values))
        return self.value

    def try_row_swap(self, slot: int, new_row: int) -> float:
        self._undo = ("row", slot, self.rows[slot], self.values, self.value, self.gram)
        self.rows[slot] = new_row
        self._refresh()
        return self.value

    def undo(self):
        kind = self._undo[0]
        if kind == "col":
            _, i, j, values, value = self._undo
            self._swap_positions(i, j)
        else:
            _, slot, old, values, value, gram = self._undo
            self.rows[slot] = old
            self.gram = gram
        self.values, self.value = values, value


def _random_cross_block_pair(rng, n, nv):
    while True:
        i, j = rng.integers(0, n, size=2)
        if i // nv != j // nv:
            return int(i), int(j)


def _anneal(objective: CapacityObjective, template: FrameSpec, rows, perm, free_rows: bool,
            neighborhood: str, config: SearchConfig, rng: np.random.Generator):
    """One restart: annealing then first-improvement descent."""
    n, m = template.n, template.m
    nv = template.blocks.block_size
    chain = _Chain(objective, rows, perm)
    evaluations = 1
    best_val, best_state = chain.value, (list(chain.rows), chain.perm.copy())
    trace = [(0, best_val)]
    col_moves = nv < n
    row_moves = free_rows and m < n
    kinds = []
    if neighborhood in ("column", "both") and col_moves:
        kinds.append("col")
    if neighborhood in ("row", "both") and row_moves:
        kinds.append("row")
    budget = config.max_evaluations
    temp = config.t0
    for it in range(1, config.iterations + 1 if kinds else 1):
        if budget is not None and evaluations >= budget:
            break
        kind = kinds[int(rng.integers(len(kinds)))] if len(kinds) > 1 else kinds[0]
        current = chain.value
        if kind == "col":
            new = chain.try_column_swap(*_random_cross_block_pair(rng, n, nv))
        else:
            slot = int(rng.integers(m))
            outside = [r for r in range(n) if r not in chain.rows]
            new = chain.try_row_swap(slot, outside[int(rng.integers(len(outside)))])
        evaluations += 1
        delta = new - current
        u = rng.random()
        if not (delta >= 0 or (temp > 0 and u < math.exp(delta / temp))):
            chain.undo()
        if chain.value > best_val + TIE_TOL:
            best_val, best_state = chain.value, (list(chain.rows), chain.perm.copy())
        trace.append((it, best_val))
        temp *= config.cooling

    chain = _Chain(objective, *best_state)
    if config.descent:
        improved = True
        while improved and (budget is None or evaluations < budget):
            improved = False
            if "col" in kinds:
                for i in range(n):
                    for j in range(i + 1, n):
                        if i // nv == j // nv:
                            continue
                        if budget is not None and evaluations >= budget:
                            break
                        before = chain.value
                        after = chain.try_column_swap(i, j)
                        evaluations += 1
                        if after > before + TIE_TOL:
                            improved = True
                        else:
                            chain.undo()
            if "row" in kinds:
                for slot in range(m):
                    for r in range(n):
                        if r in chain.rows:
                            continue
                        if budget is not None and evaluations >= budget:
                            break
                        before = chain.value
                        after = chain.try_row_swap(slot, r)
                        evaluations += 1
                        if after > before + TIE_TOL:
                            improved = True
                        else:
                            chain.undo()
        if chain.value > best_val + TIE_TOL:
            trace.append((trace[-1][0] + 1, chain.value))
        best_val = max(best_val, chain.value)

    spec = canonicalize(chain.spec(template))
    return {
        "best_spec": spec_to_dict(spec),
        "best_objective": float(objective.of_spec(spec)),
        "trace": trace,
        "evaluations": evaluations,
    }


def _pick_best(states: Sequence[dict]) -> dict:
    best = None
    for st in states:
        if best is None or st["best_objective"] > best["best_objective"] + TIE_TOL:
            best = st
        elif abs(st["best_objective"] - best["best_objective"]) <= TIE_TOL:
            a, b = spec_from_dict(st["best_spec"]), spec_from_dict(best["best_spec"])
            if spec_key(a) < spec_key(b):
                best = st
    return best


def _run_restarts(make_start, objective, template, free_rows, neighborhood, config,
                  checkpoint: Optional[Path], payload: dict) -> SearchResult:
    chash = config_hash(payload)
    done: dict[int, dict] = {}
    if checkpoint is not None and Path(checkpoint).exists():
        saved = json.loads(Path(checkpoint).read_text())
        if saved.get("config_hash") != chash:
            raise ValidationError("checkpoint was written for a different search configuration")
        done = {int(st["restart"]): st for st in saved.get("restart_states", [])}

    seeds = np.random.SeedSequence(config.seed).spawn(config.restarts)

    def run(r):
        if r in done:
            return done[r]
        rng = np.random.default_rng(seeds[r])
        rows, perm = make_start(r, rng)
        st = _anneal(objective, template, rows, perm, free_rows, neighborhood, config, rng)
        st["restart"] = r
        return st

    def save():
        if checkpoint is None:
            return
        states = [done[r] for r in sorted(done)]
        best = _pick_best(states) if states else None
        Path(checkpoint).write_text(json.dumps({
            "config_hash": chash,
            "restart_states": states,
            "best_spec": best["best_spec"] if best else None,
            "best_objective": best["best_objective"] if best else None,
        }, indent=1))

    pending = [r for r in range(config.restarts) if r not in done]
    if config.threads > 1:
        with ThreadPoolExecutor(config.threads) as pool:
            for r, st in zip(pending, pool.map(run, pending)):
                done[r] = st
                save()
    else:
        for r in pending:
            done[r] = run(r)
            log.info("restart %d: objective %.6f", r, done[r]["best_objective"])
            save()

    states = [done[r] for r in range(config.restarts)]
    best = _pick_best(states)
    return SearchResult(
        best_spec=spec_from_dict(best["best_spec"]),
        best_objective=best["best_objective"],
        trace=[tuple(t) for t in best["trace"]],
        evaluations=sum(st["evaluations"] for st in states),
        restart_objectives=[st["best_objective"] for st in states],
    )


# ---------------------------------------------------------------------------
# public entry points


def _check_spec_base(base, n):
    base = Base(base)
    build_base_matrix(base, n)  # validates size
    return base


def search_petf(base: Base, difference_set: DifferenceSet, blocks: BlockModel,
                config: SearchConfig, checkpoint=None) -> SearchResult:
    """Best column permutation for a fixed row set."""
    base = _check_spec_base(base, blocks.n)
    if difference_set.order != blocks.n:
        raise ValidationError(
            f"difference set lives in a group of order {difference_set.order}, frame has N={blocks.n}"
        )
    if difference_set.group is not group_for(base):
        raise ValidationError(f"{difference_set.group.value} sets do not index {base.value} rows")
    rows = difference_set.elements
    template = FrameSpec.canonical(base, blocks.n, rows, blocks)
    objective = CapacityObjective(base, blocks, config.channel, mc_count=config.mc_count,
                                  seed=config.seed)
    space = canonical_partition_count(blocks.n, blocks.num_blocks)

    if blocks.block_size == 1 or blocks.num_blocks == 1:
        value = objective.of_spec(template)
        return SearchResult(template, value, [(0, value)], 1, [value], space)

    if config.mode == "exhaustive":
        if space > EXHAUSTIVE_CAP:
            raise InfeasibleError(
                f"{format_size(space)} canonical partitions exceed the exhaustive cap {EXHAUSTIVE_CAP}",
                size=space,
            )
        value, perm, count = _exhaustive_over_partitions(objective, rows)
        spec = template.with_perm(perm)
        return SearchResult(spec, value, [(count, value)], count, [value], space)

    def make_start(r, rng):
        if r == 0:
            return rows, tuple(range(blocks.n))
        return rows, tuple(int(p) for p in rng.permutation(blocks.n))

    payload = {
        "kind": "petf", "base": base.value, "rows": list(rows), "blocks": str(blocks),
        "config": config.to_dict(),
    }
    result = _run_restarts(make_start, objective, template, False,
                           config.neighborhood or "column", config, checkpoint, payload)
    result.space_size = space
    return result


def search_butf(base: Base, blocks: BlockModel, m: int, config: SearchConfig,
                initial: Sequence[FrameSpec] = (), checkpoint=None) -> SearchResult:
    """Joint search over ``m``-row sets and column partitions.

    Restart ``i`` starts from ``initial[i]`` when given (e.g. a difference set
    or a PETF result), otherwise from a random row set and permutation.
    """
    base = _check_spec_base(base, blocks.n)
    n = blocks.n
    if not 1 <= m < n:
        raise ValidationError(f"need 1 <= M < N, got M={m}, N={n}")
    objective = CapacityObjective(base, blocks, config.channel, mc_count=config.mc_count,
                                  seed=config.seed)
    template = FrameSpec.canonical(base, n, tuple(range(m)), blocks)
    partitions = canonical_partition_count(n, blocks.num_blocks)
    row_sets = math.comb(n, m)
    space = min(partitions * row_sets, SATURATED)
    for spec in initial:
        if spec.n != n or spec.m != m or spec.blocks != blocks:
            raise ValidationError("initial spec does not match the search dimensions")

    if config.mode == "exhaustive":
        if space > EXHAUSTIVE_CAP:
            raise InfeasibleError(
                f"{format_size(space)} (row set, partition) pairs exceed the exhaustive cap "
                f"{EXHAUSTIVE_CAP}; use stochastic mode",
                size=space,
            )
        best = None
        count = 0
        for rows in itertools.combinations(range(n), m):
            if blocks.block_size == 1 or blocks.num_blocks == 1:
                value, perm, c = objective(rows, range(n)), tuple(range(n)), 1
            else:
                value, perm, c = _exhaustive_over_partitions(objective, rows)
            count += c
            if best is None or value > best[0] + TIE_TOL:
                best = (value, rows, perm)
        spec = FrameSpec(base, n, m, best[1], best[2], blocks)
        return SearchResult(spec, best[0], [(count, best[0])], count, [best[0]], space)

    def make_start(r, rng):
        if r < len(initial):
            return initial[r].rows, initial[r].perm
        rows = tuple(sorted(int(x) for x in rng.choice(n, size=m, replace=False)))
        return rows, tuple(int(p) for p in rng.permutation(n))

    payload = {
        "kind": "butf", "base": base.value, "M": m, "blocks": str(blocks),
        "initial": [spec_to_dict(s) for s in initial], "config": config.to_dict(),
    }
    result = _run_restarts(make_start, objective, template, True,
                           config.neighborhood or "both", config, checkpoint, payload)
    result.space_size = space
    return result
