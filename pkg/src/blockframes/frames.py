"""Frames built by row selection and column permutation of a unitary matrix.

A frame is ``F = Z_S W P`` rescaled to unit-norm columns, where ``W`` is the
``N x N`` unitary DFT or Sylvester-Hadamard matrix, ``Z_S`` keeps the rows in
``S`` and ``P`` reorders columns. Column ``j`` of the frame is column
``perm[j]`` of ``Z_S W``.
"""

from __future__ import annotations

import enum
from collections import Counter
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from .erasure import BlockModel
from .errors import ValidationError

NORM_TOL = 1e-10
SPECTRAL_TOL = 1e-8


class Base(str, enum.Enum):
    DFT = "dft"
    HADAMARD = "hadamard"


class Group(str, enum.Enum):
    CYCLIC = "cyclic"  # (Z_N, +)
    BINARY = "binary"  # (GF(2)^L, XOR)


def is_power_of_two(n: int) -> bool:
    return n >= 1 and n & (n - 1) == 0


def group_for(base: Base) -> Group:
    return Group.CYCLIC if Base(base) is Base.DFT else Group.BINARY


# ---------------------------------------------------------------------------
# difference sets


@dataclass(frozen=True)
class DifferenceSet:
    group: Group
    order: int
    elements: tuple[int, ...]
    lam: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "group", Group(self.group))
        elements = tuple(sorted(int(e) for e in self.elements))
        object.__setattr__(self, "elements", elements)
        if self.order < 1:
            raise ValidationError("group order must be positive")
        if len(set(elements)) != len(elements):
            raise ValidationError(f"difference set has repeated elements: {elements}")
        if elements and (elements[0] < 0 or elements[-1] >= self.order):
            raise ValidationError(f"elements must lie in [0, {self.order - 1}]")
        if self.group is Group.BINARY and not is_power_of_two(self.order):
            raise ValidationError(f"binary group order {self.order} is not a power of two")

    @property
    def size(self) -> int:
        return len(self.elements)

    def difference(self, a: int, b: int) -> int:
        if self.group is Group.BINARY:
            return a ^ b
        return (a - b) % self.order


@dataclass(frozen=True)
class DifferenceSetReport:
    is_difference_set: bool
    multiplicities: dict
    lam: Optional[int]
    degenerate: bool


def verify_difference_set(candidate: DifferenceSet) -> DifferenceSetReport:
    """Count differences over all ordered pairs of distinct members.

    The set is a difference set when every nonzero group element occurs the
    same number of times ``lam`` and ``lam = M(M-1)/(N-1)``. A set with no
    nonzero group elements to cover (``N = 1``) or fewer than two members is
    reported as degenerate.
    """
    counts = Counter(
        candidate.difference(a, b)
        for a in candidate.elements
        for b in candidate.elements
        if a != b
    )
    n, m = candidate.order, candidate.size
    multiplicities = {g: counts.get(g, 0) for g in range(1, n)}
    values = set(multiplicities.values())
    degenerate = m < 2 or n < 2
    if n == 1:
        return DifferenceSetReport(True, multiplicities, 0, degenerate)
    if len(values) != 1:
        return DifferenceSetReport(False, multiplicities, None, degenerate)
    lam = values.pop()
    ok = lam * (n - 1) == m * (m - 1)
    return DifferenceSetReport(ok, multiplicities, lam if ok else None, degenerate)


# ---------------------------------------------------------------------------
# base matrices


def _popcount_parity(x: np.ndarray) -> np.ndarray:
    parity = np.zeros_like(x)
    while np.any(x):
        parity ^= x & 1
        x = x >> 1
    return parity


def build_base_matrix(base: Base, n: int) -> np.ndarray:
    """Unitary ``n x n`` DFT or Sylvester-ordered Hadamard matrix.

    DFT entries are ``exp(-2j*pi*s*k/n)/sqrt(n)``; Hadamard entries are
    ``(-1)**<bits(s), bits(k)>/sqrt(n)`` and returned as a real array.
    """
    base = Base(base)
    if n < 2:
        raise ValidationError(f"matrix size must be at least 2, got {n}")
    idx = np.arange(n)
    if base is Base.DFT:
        phase = np.outer(idx, idx) % n
        return np.exp(-2j * np.pi * phase / n) / np.sqrt(n)
    if not is_power_of_two(n):
        raise ValidationError(f"Hadamard size {n} is not a power of two")
    signs = 1 - 2 * _popcount_parity(np.bitwise_and.outer(idx, idx))
    return signs / np.sqrt(n)


# ---------------------------------------------------------------------------
# frame recipes and frames


@dataclass(frozen=True)
class FrameSpec:
    base: Base
    n: int
    m: int
    rows: tuple[int, ...]
    perm: tuple[int, ...]
    blocks: BlockModel

    def __post_init__(self):
        object.__setattr__(self, "base", Base(self.base))
        object.__setattr__(self, "rows", tuple(int(r) for r in self.rows))
        object.__setattr__(self, "perm", tuple(int(p) for p in self.perm))
        if not 1 <= self.m < self.n:
            raise ValidationError(f"need 1 <= M < N, got M={self.m}, N={self.n}")
        if self.base is Base.HADAMARD and not is_power_of_two(self.n):
            raise ValidationError(f"Hadamard frames need N a power of two, got {self.n}")
        if len(self.rows) != self.m:
            raise ValidationError(f"row set has {len(self.rows)} entries, expected M={self.m}")
        if len(set(self.rows)) != self.m:
            raise ValidationError(f"row set repeats a row: {self.rows}")
        if min(self.rows) < 0 or max(self.rows) >= self.n:
            raise ValidationError(f"rows must lie in [0, {self.n - 1}]")
        if sorted(self.perm) != list(range(self.n)):
            raise ValidationError("permutation is not a bijection on 0..N-1")
        if self.blocks.n != self.n:
            raise ValidationError(
                f"block model covers {self.blocks.n} columns but N={self.n}"
            )

    @classmethod
    def canonical(cls, base, n, rows, blocks) -> "FrameSpec":
        """Spec with the identity column order."""
        return cls(base, n, len(rows), tuple(rows), tuple(range(n)), blocks)

    def with_perm(self, perm) -> "FrameSpec":
        return FrameSpec(self.base, self.n, self.m, self.rows, tuple(perm), self.blocks)

    def with_rows(self, rows) -> "FrameSpec":
        return FrameSpec(self.base, self.n, self.m, tuple(rows), self.perm, self.blocks)


@dataclass(frozen=True, eq=False)
class Frame:
    entries: np.ndarray
    blocks: BlockModel
    spec: Optional[FrameSpec] = field(default=None)

    def __post_init__(self):
        entries = np.array(self.entries)
        if entries.ndim != 2:
            raise ValidationError("frame entries must be a 2-D matrix")
        if np.iscomplexobj(entries) and not np.any(entries.imag):
            entries = entries.real.copy()
        entries.flags.writeable = False
        object.__setattr__(self, "entries", entries)
        m, n = entries.shape
        if m > n:
            raise ValidationError(f"frame has more rows ({m}) than columns ({n})")
        if self.blocks.n != n:
            raise ValidationError(f"block model covers {self.blocks.n} columns, frame has {n}")
        norms = np.sum(np.abs(entries) ** 2, axis=0)
        worst = float(np.max(np.abs(norms - 1.0)))
        if worst >= NORM_TOL:
            raise ValidationError(f"frame columns are not unit norm (max deviation {worst:.3g})")

    @property
    def m(self) -> int:
        return self.entries.shape[0]

    @property
    def n(self) -> int:
        return self.entries.shape[1]

    def with_blocks(self, blocks: BlockModel) -> "Frame":
        spec = self.spec
        if spec is not None:
            spec = FrameSpec(spec.base, spec.n, spec.m, spec.rows, spec.perm, blocks)
        return Frame(self.entries, blocks, spec)


def construct_frame(spec: FrameSpec) -> Frame:
    w = build_base_matrix(spec.base, spec.n)
    entries = w[list(spec.rows)][:, list(spec.perm)] * np.sqrt(spec.n / spec.m)
    return Frame(entries, spec.blocks, spec)


# ---------------------------------------------------------------------------
# correlation quantities


def gram(matrix: np.ndarray) -> np.ndarray:
    a = np.asarray(matrix)
    g = a.conj().T @ a
    return (g + g.conj().T) / 2


def squared_correlation_matrix(frame: Frame) -> np.ndarray:
    """``|<f_n, f_k>|**2`` for every column pair."""
    return np.abs(gram(frame.entries)) ** 2


class WelchBounds(NamedTuple):
    average_bound: float
    epsilon_wb: float


def welch_bounds(n: int, m: int) -> WelchBounds:
    """Lower bounds on mean and maximum off-diagonal squared correlation.

    Both equal ``(N - M) / ((N - 1) M)``; they are attained by unit-norm tight
    frames and equiangular tight frames respectively.
    """
    if m < 1 or n < m:
        raise ValidationError(f"Welch bounds need N >= M >= 1, got N={n}, M={m}")
    if n == 1:
        return WelchBounds(0.0, 0.0)
    eps = (n - m) / ((n - 1) * m)
    return WelchBounds(eps, eps)


@dataclass(frozen=True)
class Tightness:
    a: float
    b: float
    is_tight: bool
    is_untf: bool


def tightness(frame: Frame) -> Tightness:
    """Optimal frame bounds: extreme eigenvalues of the frame operator ``F F^H``."""
    f = frame.entries
    eigs = np.linalg.eigvalsh(f @ f.conj().T)
    a, b = float(eigs[0]), float(eigs[-1])
    tight = b - a <= SPECTRAL_TOL
    untf = tight and abs(a - frame.n / frame.m) <= SPECTRAL_TOL
    return Tightness(a, b, tight, untf)


def mean_offdiagonal(corr: np.ndarray) -> float:
    n = corr.shape[0]
    return float((corr.sum() - np.trace(corr)) / (n * (n - 1)))
