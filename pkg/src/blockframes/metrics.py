"""Performance functionals of a frame under block erasures.

* NOMA-CDMA average capacity ``E[sum_k log2(1 + SNR * lambda_k)]`` over
  surviving subframes, its orthogonality bound ``K log2(1 + SNR)`` and the
  capacity outage probability.
* STC pairwise error bound ``E[prod_k (1 + SNR/4 * lambda_k)^-1]`` using the
  ``M x M`` Gram, with the bound ``(1 + SNR/4)^-M``.
* Block correlation structure: distance of the intra-block squared
  correlations from identity and deviation from the ideal block structure.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .erasure import resolve_selections
from .errors import ValidationError
from .frames import Frame, squared_correlation_matrix, welch_bounds
from .spectra import subframe_spectra

DEFAULT_OUTAGE_FRACTION = 0.98
EIG_TOL = 1e-8


@dataclass(frozen=True)
class ChannelParams:
    snr_linear: float

    def __post_init__(self):
        if not self.snr_linear > 0:
            raise ValidationError(f"SNR must be positive, got {self.snr_linear}")

    @classmethod
    def from_db(cls, snr_db: float) -> "ChannelParams":
        return cls(10.0 ** (snr_db / 10.0))

    @property
    def snr_db(self) -> float:
        return 10.0 * math.log10(self.snr_linear)


def _check_eigs(eigs) -> np.ndarray:
    eigs = np.asarray(eigs, dtype=float)
    if eigs.size and eigs.min() < -EIG_TOL:
        raise ValidationError(f"negative eigenvalue {eigs.min():.3g}")
    return np.maximum(eigs, 0.0)


def instantaneous_capacity(eigenvalues, channel: ChannelParams) -> float:
    eigs = _check_eigs(eigenvalues)
    return float(np.sum(np.log2(1.0 + channel.snr_linear * eigs)))


def capacity_orthogonality_bound(k: int, channel: ChannelParams) -> float:
    if k < 1:
        raise ValidationError("K must be at least 1")
    return k * math.log2(1.0 + channel.snr_linear)


@dataclass(frozen=True, eq=False)
class CapacityReport:
    mean: float
    selections: np.ndarray
    capacities: np.ndarray
    orthogonality_bound: float
    outage: dict = field(default_factory=dict)
    weights: Optional[np.ndarray] = None

    @property
    def per_selection(self):
        return [
            (tuple(int(b) for b in s), float(c)) for s, c in zip(self.selections, self.capacities)
        ]


def _warn_k_above_m(frame: Frame):
    if frame.blocks.k > frame.m:
        warnings.warn(
            f"K={frame.blocks.k} active columns exceed M={frame.m}; "
            "capacity evaluated outside the K <= M design regime",
            stacklevel=3,
        )


def average_capacity(frame: Frame, channel: ChannelParams, mode=None,
                     fractions=(DEFAULT_OUTAGE_FRACTION,)) -> CapacityReport:
    _warn_k_above_m(frame)
    selections = resolve_selections(frame.blocks, mode)
    eigs = subframe_spectra(frame, selections)
    caps = np.log2(1.0 + channel.snr_linear * eigs).sum(axis=1)
    report = CapacityReport(
        mean=float(np.mean(caps)),
        selections=selections,
        capacities=caps,
        orthogonality_bound=capacity_orthogonality_bound(frame.blocks.k, channel),
    )
    for fraction in fractions:
        report.outage[float(fraction)] = capacity_outage(report, fraction)
    return report


def capacity_outage(report: CapacityReport, rate_fraction: float = DEFAULT_OUTAGE_FRACTION) -> float:
    """Probability that a selection's capacity is below ``rate_fraction * mean``."""
    if not 0 < rate_fraction <= 1:
        raise ValidationError(f"rate fraction must lie in (0, 1], got {rate_fraction}")
    caps = np.asarray(report.capacities, dtype=float)
    if caps.size == 0:
        raise ValidationError("report has no per-selection capacities")
    weights = report.weights
    if weights is None:
        weights = np.full(caps.size, 1.0 / caps.size)
    else:
        weights = np.asarray(weights, dtype=float) / np.sum(weights)
    threshold = rate_fraction * report.mean
    return float(np.sum(weights[caps < threshold]))


@dataclass(frozen=True, eq=False)
class StcReport:
    bound_mean: float
    selections: np.ndarray
    terms: np.ndarray
    orthogonality_bound: float

    @property
    def per_selection(self):
        return [(tuple(int(b) for b in s), float(t)) for s, t in zip(self.selections, self.terms)]


def stc_orthogonality_bound(m: int, channel: ChannelParams) -> float:
    return float(np.exp(-m * np.log1p(channel.snr_linear / 4.0)))


def stc_error_bound(frame: Frame, channel: ChannelParams, mode=None) -> StcReport:
    """Average pairwise error bound of the two-codeword space-time code."""
    m, k = frame.m, frame.blocks.k
    if k < m:
        raise ValidationError(f"STC setting requires M <= K, got M={m} > K={k}")
    selections = resolve_selections(frame.blocks, mode)
    eigs = subframe_spectra(frame, selections)  # M x M side since K >= M
    log_terms = -np.log1p(channel.snr_linear / 4.0 * eigs).sum(axis=1)
    terms = np.exp(log_terms)
    return StcReport(
        bound_mean=float(np.mean(terms)),
        selections=selections,
        terms=terms,
        orthogonality_bound=stc_orthogonality_bound(m, channel),
    )


# ---------------------------------------------------------------------------
# block correlation structure


def _block_masks(frame: Frame) -> np.ndarray:
    labels = np.arange(frame.n) // frame.blocks.block_size
    return labels[:, None] == labels[None, :]


def intra_block_identity_distance(frame: Frame) -> float:
    """Frobenius distance between the diagonal correlation blocks and identity."""
    corr = squared_correlation_matrix(frame)
    same = _block_masks(frame)
    diff = np.where(same, corr - np.eye(frame.n), 0.0)
    return float(np.sqrt(np.sum(diff**2)))


def desired_epsilon(n: int, m: int, num_blocks: int) -> float:
    """Inter-block squared correlation keeping the mean at the Welch bound
    when all intra-block correlations vanish."""
    if num_blocks < 1 or n % num_blocks:
        raise ValidationError(f"N={n} is not divisible by N_B={num_blocks}")
    if n <= m:
        raise ValidationError(f"need N > M, got N={n}, M={m}")
    nv = n // num_blocks
    eps_wb = welch_bounds(n, m).epsilon_wb
    if num_blocks == 1:
        return math.inf if nv > 1 else eps_wb
    return (1 + (nv - 1) / (nv * (num_blocks - 1))) * eps_wb


@dataclass(frozen=True)
class StructureDeviation:
    intra_rms: float
    inter_rms_error: float


def desired_structure_deviation(frame: Frame) -> StructureDeviation:
    corr = squared_correlation_matrix(frame)
    same = _block_masks(frame)
    off = ~np.eye(frame.n, dtype=bool)
    intra = corr[same & off]
    inter = corr[~same]
    eps = desired_epsilon(frame.n, frame.m, frame.blocks.num_blocks)
    intra_rms = float(np.sqrt(np.mean(intra**2))) if intra.size else 0.0
    inter_rms = float(np.sqrt(np.mean((inter - eps) ** 2))) if inter.size else 0.0
    return StructureDeviation(intra_rms, inter_rms)
