"""Block-erasure channel: block partition, active-block selections, subframes.

Columns of an ``M x N`` frame are split into ``num_blocks`` consecutive blocks
of ``block_size`` columns. An erasure realization keeps ``active_blocks`` of
them; a selection is the sorted tuple of surviving block indices.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass
from typing import Iterator, NamedTuple

import numpy as np

from .errors import InfeasibleError, ValidationError

#: Largest selection count evaluated by full enumeration.
EXACT_LIMIT = 100_000

_MAX_ENUMERABLE = 2**63 - 1


@dataclass(frozen=True)
class BlockModel:
    num_blocks: int
    block_size: int
    active_blocks: int

    def __post_init__(self):
        for name in ("num_blocks", "block_size", "active_blocks"):
            value = getattr(self, name)
            if not isinstance(value, (int, np.integer)) or value < 1:
                raise ValidationError(f"{name} must be a positive integer, got {value!r}")
        if self.active_blocks > self.num_blocks:
            raise ValidationError(
                f"active_blocks={self.active_blocks} exceeds num_blocks={self.num_blocks}"
            )
        if self.active_blocks == 1 and self.num_blocks > 1:
            warnings.warn(
                "a single active block is outside the modelled regime (N_A > 1)",
                stacklevel=3,
            )

    @property
    def n(self) -> int:
        return self.num_blocks * self.block_size

    @property
    def k(self) -> int:
        return self.active_blocks * self.block_size

    @property
    def num_erased(self) -> int:
        return self.num_blocks - self.active_blocks

    @classmethod
    def parse(cls, text: str) -> "BlockModel":
        """Parse the ``NB:NV:NA`` command-line syntax, e.g. ``16:4:4``."""
        parts = text.split(":")
        if len(parts) != 3:
            raise ValidationError(f"block model must look like NB:NV:NA, got {text!r}")
        try:
            nb, nv, na = (int(p) for p in parts)
        except ValueError as exc:
            raise ValidationError(f"non-integer field in block model {text!r}") from exc
        return cls(nb, nv, na)

    def __str__(self):
        return f"{self.num_blocks}:{self.block_size}:{self.active_blocks}"


class Ratios(NamedTuple):
    p: float
    gamma: float
    beta: float


def ratios(model: BlockModel, m: int) -> Ratios:
    """Non-erasure probability, frame aspect ratio M/N and subframe aspect ratio K/M."""
    if m < 1:
        raise ValidationError("M must be at least 1")
    return Ratios(
        model.active_blocks / model.num_blocks,
        m / model.n,
        model.k / m,
    )


def num_selections(model: BlockModel) -> int:
    return math.comb(model.num_blocks, model.active_blocks)


def enumerate_selections(model: BlockModel) -> Iterator[tuple[int, ...]]:
    """All active-block selections in lexicographic order."""
    count = num_selections(model)
    if count > _MAX_ENUMERABLE:
        raise InfeasibleError(
            f"C({model.num_blocks},{model.active_blocks}) = {count} selections cannot be "
            "enumerated; use Monte Carlo sampling instead",
            size=count,
        )
    return itertools.combinations(range(model.num_blocks), model.active_blocks)


def selection_array(model: BlockModel) -> np.ndarray:
    """Enumerated selections as an ``(count, active_blocks)`` integer array."""
    count = num_selections(model)
    if count > EXACT_LIMIT:
        raise InfeasibleError(
            f"{count} selections exceed the enumeration limit {EXACT_LIMIT}", size=count
        )
    out = np.fromiter(
        itertools.chain.from_iterable(enumerate_selections(model)),
        dtype=np.int64,
        count=count * model.active_blocks,
    )
    return out.reshape(count, model.active_blocks)


def sample_selections(model: BlockModel, rng: np.random.Generator, size: int) -> np.ndarray:
    """Draw ``size`` selections uniformly (with replacement between draws).

    Each row is a uniformly random ``active_blocks``-subset, sorted ascending.
    """
    keys = rng.random((size, model.num_blocks))
    picked = np.argpartition(keys, model.active_blocks - 1, axis=1)[:, : model.active_blocks]
    return np.sort(picked, axis=1)


def sample_selection(model: BlockModel, rng: np.random.Generator) -> tuple[int, ...]:
    return tuple(int(i) for i in sample_selections(model, rng, 1)[0])


def worker_generators(seed: int, workers: int) -> list[np.random.Generator]:
    """Independent generator per worker, derived from one master seed."""
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(workers)]


def column_indices(model: BlockModel, selection) -> np.ndarray:
    """Frame columns covered by ``selection``, ascending block order."""
    sel = np.asarray(selection, dtype=np.int64)
    if sel.ndim != 1:
        raise ValidationError("selection must be one-dimensional")
    if sel.size != model.active_blocks:
        raise ValidationError(
            f"selection {tuple(sel.tolist())} has {sel.size} blocks, the model keeps {model.active_blocks}"
        )
    if (sel.min() < 0 or sel.max() >= model.num_blocks):
        raise ValidationError(
            f"selection {tuple(sel.tolist())} out of range for {model.num_blocks} blocks"
        )
    if np.unique(sel).size != sel.size:
        raise ValidationError(f"selection {tuple(sel.tolist())} repeats a block")
    sel = np.sort(sel)
    return (sel[:, None] * model.block_size + np.arange(model.block_size)).ravel()


def subframe(frame, selection) -> np.ndarray:
    """Horizontal concatenation of the selected blocks of ``frame``."""
    cols = column_indices(frame.blocks, selection)
    return frame.entries[:, cols]


@dataclass(frozen=True)
class Exhaustive:
    """Evaluate over every selection."""


@dataclass(frozen=True)
class MonteCarlo:
    """Evaluate over ``count`` uniformly sampled selections."""

    count: int
    seed: int


def resolve_selections(model: BlockModel, mode=None) -> np.ndarray:
    """Selections an evaluator should visit.

    ``mode=None`` means exhaustive, which is refused above :data:`EXACT_LIMIT`
    selections; pass :class:`MonteCarlo` for those configurations.
    """
    if mode is None or isinstance(mode, Exhaustive):
        return selection_array(model)
    if isinstance(mode, MonteCarlo):
        if mode.count < 1:
            raise ValidationError("Monte Carlo sample count must be positive")
        return sample_selections(model, np.random.default_rng(mode.seed), mode.count)
    raise ValidationError(f"unknown evaluation mode {mode!r}")


def auto_mode(model: BlockModel, count: int = 10_000, seed: int = 0):
    """Exhaustive when enumerable, otherwise Monte Carlo with the given budget."""
    if num_selections(model) <= EXACT_LIMIT:
        return Exhaustive()
    return MonteCarlo(count, seed)
