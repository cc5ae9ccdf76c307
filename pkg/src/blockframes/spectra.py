"""Subframe Gram spectra and their limiting reference laws.

Eigenvalue distributions here always describe the ``K x K`` subframe Gram
``F_S^H F_S``. When ``K > M`` only ``M`` eigenvalues are computed and the
remaining ``K - M`` are known to be zero; histograms add them back.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import integrate

from .erasure import column_indices, resolve_selections
from .errors import NumericalError, ValidationError

CLAMP_TOL = 1e-10
MIDPOINTS_PER_BIN = 32
PROB_FLOOR = 1e-12


def _smaller_side_gram(a: np.ndarray) -> np.ndarray:
    """Batched Gram on the smaller side of the trailing two axes."""
    ah = np.conj(np.swapaxes(a, -1, -2))
    m, k = a.shape[-2:]
    g = ah @ a if k <= m else a @ ah
    return (g + np.conj(np.swapaxes(g, -1, -2))) / 2


def _clamped_eigvalsh(g: np.ndarray, context: str = "") -> np.ndarray:
    try:
        eigs = np.linalg.eigvalsh(g)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(
            f"eigensolver failed{context}: shape {g.shape}, "
            f"max |entry| {np.max(np.abs(g)):.3g}, finite={np.all(np.isfinite(g))}"
        ) from exc
    low = eigs.min() if eigs.size else 0.0
    if low < -CLAMP_TOL:
        raise NumericalError(f"Gram matrix has eigenvalue {low:.3g} < 0{context}")
    return np.maximum(eigs, 0.0)


def gram_spectrum(sub: np.ndarray) -> np.ndarray:
    """Ascending eigenvalues of the smaller-side Gram of an ``M x K`` matrix."""
    a = np.asarray(sub)
    if a.ndim != 2:
        raise ValidationError("expected a 2-D matrix")
    return _clamped_eigvalsh(_smaller_side_gram(a))


def subframe_spectra(frame, selections: np.ndarray) -> np.ndarray:
    """Spectra of every selection's subframe, shape ``(len(selections), min(M, K))``."""
    selections = np.atleast_2d(np.asarray(selections, dtype=np.int64))
    model = frame.blocks
    cols = np.stack([column_indices(model, s) for s in selections])
    subs = frame.entries[:, cols].transpose(1, 0, 2)  # (count, M, K)
    try:
        return _clamped_eigvalsh(_smaller_side_gram(subs))
    except NumericalError:
        # redo one by one to name the offending selection
        for sel, sub in zip(selections, subs):
            _clamped_eigvalsh(_smaller_side_gram(sub), f" for selection {tuple(sel.tolist())}")
        raise


# ---------------------------------------------------------------------------
# reference densities


def manova_edges(beta: float, gamma: float) -> tuple[float, float]:
    root_a = np.sqrt(beta * (1.0 - gamma))
    root_b = np.sqrt(max(1.0 - beta * gamma, 0.0))
    return float((root_a - root_b) ** 2), float((root_a + root_b) ** 2)


def mp_edges(beta: float) -> tuple[float, float]:
    return float((1 - np.sqrt(beta)) ** 2), float((1 + np.sqrt(beta)) ** 2)


def _check_params(beta, gamma=None):
    if not beta > 0:
        raise ValidationError(f"beta must be positive, got {beta}")
    if gamma is not None and not 0 < gamma <= 1:
        raise ValidationError(f"gamma must lie in (0, 1], got {gamma}")


def manova_density(lam, beta: float, gamma: float):
    """Continuous part of the MANOVA law; zero outside its support."""
    _check_params(beta, gamma)
    lo, hi = manova_edges(beta, gamma)
    x = np.asarray(lam, dtype=float)
    inside = (x > lo) & (x < hi)
    xs = np.where(inside, x, 1.0)
    num = np.sqrt(np.clip((hi - xs) * (xs - lo), 0.0, None))
    den = 2 * np.pi * beta * xs * (1 - gamma * xs)
    out = np.where(inside, num / np.where(inside, den, 1.0), 0.0)
    return out if out.ndim else float(out)


def mp_density(lam, beta: float):
    """Continuous part of the Marchenko-Pastur law with ratio ``beta``."""
    _check_params(beta)
    lo, hi = mp_edges(beta)
    x = np.asarray(lam, dtype=float)
    inside = (x > lo) & (x < hi)
    xs = np.where(inside, x, 1.0)
    num = np.sqrt(np.clip((hi - xs) * (xs - lo), 0.0, None))
    out = np.where(inside, num / (2 * np.pi * beta * xs), 0.0)
    return out if out.ndim else float(out)


class ModelKind(str, enum.Enum):
    MANOVA = "manova"
    MARCHENKO_PASTUR = "mp"


@dataclass(frozen=True)
class SpectralModel:
    """Reference eigenvalue law: continuous density plus up to two atoms.

    ``point_mass`` is the MANOVA atom at ``1/gamma``; ``zero_mass`` is the atom
    at 0 carried by both laws when ``beta > 1`` (more active columns than
    dimensions).
    """

    kind: ModelKind
    beta: float
    gamma: Optional[float]
    support: tuple[float, float]
    point_mass: tuple[float, float] = (0.0, 0.0)
    zero_mass: float = 0.0

    @classmethod
    def manova(cls, beta: float, gamma: float) -> "SpectralModel":
        _check_params(beta, gamma)
        weight = max(0.0, 1 + 1 / beta - 1 / (beta * gamma))
        return cls(
            ModelKind.MANOVA,
            beta,
            gamma,
            manova_edges(beta, gamma),
            (1 / gamma, weight),
            max(0.0, 1 - 1 / beta),
        )

    @classmethod
    def marchenko_pastur(cls, beta: float) -> "SpectralModel":
        _check_params(beta)
        return cls(
            ModelKind.MARCHENKO_PASTUR, beta, None, mp_edges(beta), (0.0, 0.0),
            max(0.0, 1 - 1 / beta),
        )

    def density(self, lam):
        if self.kind is ModelKind.MANOVA:
            return manova_density(lam, self.beta, self.gamma)
        return mp_density(lam, self.beta)

    def atoms(self) -> list[tuple[float, float]]:
        out = []
        if self.zero_mass > 0:
            out.append((0.0, self.zero_mass))
        if self.point_mass[1] > 0:
            out.append(self.point_mass)
        return out

    def continuous_mass(self) -> float:
        lo, hi = self.support
        if hi <= lo:
            return 0.0
        value, _ = integrate.quad(self.density, lo, hi, limit=200, epsabs=1e-12)
        return value

    def total_mass(self) -> float:
        return self.continuous_mass() + sum(w for _, w in self.atoms())

    def bin_probabilities(self, edges: np.ndarray) -> np.ndarray:
        """Model probability of each histogram bin.

        The density is integrated with a composite midpoint rule on the part of
        each bin inside the support; atoms go to the bin containing them.
        """
        edges = np.asarray(edges, dtype=float)
        lo, hi = self.support
        left = np.clip(edges[:-1], lo, hi)
        right = np.clip(edges[1:], lo, hi)
        width = right - left
        t = (np.arange(MIDPOINTS_PER_BIN) + 0.5) / MIDPOINTS_PER_BIN
        nodes = left[:, None] + width[:, None] * t[None, :]
        probs = self.density(nodes).mean(axis=1) * width
        for loc, weight in self.atoms():
            idx = np.searchsorted(edges, loc, side="right") - 1
            if 0 <= idx < len(probs):
                probs[idx] += weight
            elif loc == edges[-1]:
                probs[-1] += weight
        return probs

    def expected_log2(self, snr: float) -> float:
        """``E[log2(1 + snr * lambda)]`` under the law."""
        lo, hi = self.support
        value = 0.0
        if hi > lo:
            value, _ = integrate.quad(
                lambda x: np.log2(1 + snr * x) * self.density(x), lo, hi, limit=200
            )
        for loc, weight in self.atoms():
            value += weight * np.log2(1 + snr * loc)
        return float(value)


# ---------------------------------------------------------------------------
# empirical spectra


@dataclass(frozen=True, eq=False)
class EmpiricalSpectrum:
    """Pooled subframe eigenvalues.

    ``eigenvalues[i]`` holds the ``min(M, K)`` computed eigenvalues of
    selection ``selections[i]``; ``pad_zeros`` more zeros per selection
    complete the ``K x K`` spectrum when ``K > M``.
    """

    eigenvalues: np.ndarray
    selections: np.ndarray
    pad_zeros: int
    edges: np.ndarray
    masses: np.ndarray
    weights: Optional[np.ndarray] = field(default=None)

    @property
    def bins(self) -> int:
        return len(self.masses)

    def rebin(self, edges) -> "EmpiricalSpectrum":
        masses = _histogram(self.eigenvalues, self.pad_zeros, edges, self.weights)
        return EmpiricalSpectrum(
            self.eigenvalues, self.selections, self.pad_zeros,
            np.asarray(edges, dtype=float), masses, self.weights,
        )


def _histogram(eigs, pad_zeros, edges, weights=None) -> np.ndarray:
    edges = np.asarray(edges, dtype=float)
    count, r = eigs.shape
    if weights is None:
        weights = np.full(count, 1.0 / count)
    else:
        weights = np.asarray(weights, dtype=float) / np.sum(weights)
    if eigs.size and (eigs.min() < edges[0] or eigs.max() > edges[-1]):
        raise ValidationError(
            f"eigenvalues span [{eigs.min():.4g}, {eigs.max():.4g}] outside the "
            f"histogram range [{edges[0]:.4g}, {edges[-1]:.4g}]"
        )
    per_value = np.repeat(weights / (r + pad_zeros), r)
    masses, _ = np.histogram(eigs.ravel(), bins=edges, weights=per_value)
    if pad_zeros:
        masses[0] += pad_zeros / (r + pad_zeros)
    return masses


def empirical_spectrum(frame, mode=None, bins: int = 50, upper: Optional[float] = None,
                       weights=None) -> EmpiricalSpectrum:
    """Pool subframe Gram spectra over selections and histogram them.

    The histogram spans ``[0, upper]`` with ``bins`` equal-width bins; by
    default ``upper`` is just above the largest eigenvalue.
    """
    if bins < 1:
        raise ValidationError("need at least one bin")
    selections = resolve_selections(frame.blocks, mode)
    eigs = subframe_spectra(frame, selections)
    top = float(eigs.max()) if eigs.size else 1.0
    if upper is None:
        upper = top * (1 + 1e-9) + 1e-12
    edges = np.linspace(0.0, upper, bins + 1)
    pad = max(frame.blocks.k - frame.m, 0)
    masses = _histogram(eigs, pad, edges, weights)
    return EmpiricalSpectrum(eigs, selections, pad, edges, masses, weights)


def kl_edges(model: SpectralModel, spectrum: EmpiricalSpectrum, bins: int = 50) -> np.ndarray:
    """Default KL binning: ``[0, 1.1 * upper edge]``, widened to cover all data."""
    top = float(spectrum.eigenvalues.max()) if spectrum.eigenvalues.size else 0.0
    upper = max(1.1 * model.support[1], top * (1 + 1e-9) + 1e-12)
    return np.linspace(0.0, upper, bins + 1)


def kl_divergence(empirical: EmpiricalSpectrum, model: SpectralModel) -> float:
    """Discrete KL divergence ``D(empirical || model)`` over the histogram bins.

    Model bin probabilities are floored at ``1e-12`` and renormalized, so
    quadrature error cannot push the result below zero.
    """
    return discrete_kl(empirical.masses, model.bin_probabilities(empirical.edges))


def discrete_kl(p, q) -> float:
    """KL divergence between two probability vectors on the same bins."""
    p = np.asarray(p, dtype=float)
    p = p / p.sum()
    q = np.maximum(np.asarray(q, dtype=float), PROB_FLOOR)
    q = q / q.sum()
    nz = p > 0
    return float(max(np.sum(p[nz] * np.log(p[nz] / q[nz])), 0.0))
