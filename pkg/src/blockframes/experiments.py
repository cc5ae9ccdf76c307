"""Frame families for the N=64 block-erasure sweeps.

The sweeps fix ``N = 64`` and ``N_B = 16`` blocks and vary the frame height
``M``; for each ``M`` they compare the canonical near-ETF from the catalog
with a PETF (searched column partition) and a BUTF (searched rows and
partition, started from the PETF).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .catalog import CatalogEntry, load_catalog
from .erasure import BlockModel
from .errors import ValidationError
from .frames import FrameSpec
from .metrics import ChannelParams
from .search import SearchConfig, search_butf, search_petf

N64 = 64
SWEEP_BLOCKS = BlockModel(16, 4, 4)   # p = 0.25, K = 16
STC_BLOCKS = BlockModel(16, 4, 2)     # p = 0.125, K = 8
BETA_INV_GRID = (0.75, 1.0, 1.25, 1.5, 1.75, 2.0)


@dataclass(frozen=True)
class SweepSearch:
    """Search budget used per frame height."""

    snr_db: float = 20.0
    restarts: int = 1
    iterations: int = 1000
    seed: int = 1
    butf: bool = True


def height_for(beta_inv: float, k: int) -> int:
    """Frame height ``M`` realizing ``M / K = beta_inv`` as closely as possible."""
    m = int(round(beta_inv * k))
    if m < 1:
        raise ValidationError(f"beta_inv={beta_inv} gives M < 1 for K={k}")
    return m


def near_etf_entry(m: int, n: int = N64, base: str = "hadamard", entries=None) -> CatalogEntry:
    """Catalog row set of height ``m``: an exact difference set if one is listed,
    otherwise the almost set with the smallest maximum squared correlation."""
    entries = load_catalog() if entries is None else entries
    matches = [e for e in entries if e.n == n and e.m == m and e.base.value == base]
    if not matches:
        raise ValidationError(f"no catalog row set for base={base}, N={n}, M={m}")
    exact = [e for e in matches if not e.almost]
    if exact:
        return exact[0]
    return min(matches, key=lambda e: (e.max_sq_correlation or 1.0, e.name))


def sweep_frames(m: int, blocks: BlockModel = SWEEP_BLOCKS, search: SweepSearch = SweepSearch(),
                 entries=None) -> dict:
    """Canonical, PETF and (optionally) BUTF specs of height ``m``.

    Returns ``{"canonical": spec, "petf": SearchResult, "butf": SearchResult}``
    plus the catalog entry under ``"entry"``.
    """
    entry = near_etf_entry(m, blocks.n, entries=entries)
    channel = ChannelParams.from_db(search.snr_db)
    cfg = SearchConfig(channel, restarts=search.restarts, iterations=search.iterations,
                       seed=search.seed)
    canonical = FrameSpec.canonical(entry.base, entry.n, entry.difference_set.elements, blocks)
    out = {"entry": entry, "canonical": canonical}
    out["petf"] = search_petf(entry.base, entry.difference_set, blocks, cfg)
    if search.butf:
        out["butf"] = search_butf(entry.base, blocks, m, cfg, initial=[out["petf"].best_spec])
    return out


def level_crossing_db(snr_db, values, level: float) -> float:
    """SNR (dB) where a decreasing curve first crosses ``level``.

    Interpolates linearly in ``log10(value)`` between grid points; NaN when
    the curve never crosses.
    """
    snr_db = np.asarray(snr_db, dtype=float)
    logs = np.log10(np.asarray(values, dtype=float))
    target = np.log10(level)
    for i in range(len(snr_db) - 1):
        if logs[i] >= target >= logs[i + 1]:
            t = (logs[i] - target) / (logs[i] - logs[i + 1])
            return float(snr_db[i] + t * (snr_db[i + 1] - snr_db[i]))
    return float("nan")
