"""Bundled difference sets and near-ETF row sets.

Entries are stored as versioned JSON::

    {"version": 1, "entries": [{"name", "group", "N", "M", "lambda",
      "elements", "base", "almost", "provenance", "notes"}, ...]}

Exact entries are re-verified on every load. Entries flagged ``almost`` are
near-ETF row sets with no difference-set property; they carry the largest
off-diagonal squared correlation of their frame in ``max_sq_correlation``.
"""

from __future__ import annotations

import itertools
import json
import math
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import NamedTuple, Optional

import numpy as np

from .errors import InfeasibleError, ValidationError
from .frames import Base, DifferenceSet, Group, build_base_matrix, group_for, verify_difference_set

CATALOG_VERSION = 1
FIND_MAX_N = 32
FIND_MAX_CANDIDATES = 2_000_000


@dataclass(frozen=True)
class CatalogEntry:
    name: str
    difference_set: DifferenceSet
    base: Base
    almost: bool = False
    provenance: str = ""
    notes: str = ""
    max_sq_correlation: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "base", Base(self.base))

    @property
    def n(self) -> int:
        return self.difference_set.order

    @property
    def m(self) -> int:
        return self.difference_set.size

    def to_dict(self) -> dict:
        d = {
            "name": self.name,
            "group": self.difference_set.group.value,
            "N": self.n,
            "M": self.m,
            "lambda": self.difference_set.lam,
            "elements": list(self.difference_set.elements),
            "base": self.base.value,
            "almost": self.almost,
            "provenance": self.provenance,
            "notes": self.notes,
        }
        if self.max_sq_correlation is not None:
            d["max_sq_correlation"] = self.max_sq_correlation
        return d


def default_catalog_path() -> Path:
    return Path(str(resources.files("blockframes") / "data" / "catalog.json"))


def _entry_lines(text: str) -> list[int]:
    """Line number of each ``"name"`` key, in document order."""
    return [text.count("\n", 0, m.start()) + 1 for m in re.finditer(r'"name"\s*:', text)]


def _parse_entry(raw: dict) -> CatalogEntry:
    try:
        ds = DifferenceSet(raw["group"], int(raw["N"]), tuple(raw["elements"]), raw.get("lambda"))
        entry = CatalogEntry(
            name=str(raw["name"]),
            difference_set=ds,
            base=Base(raw["base"]),
            almost=bool(raw.get("almost", False)),
            provenance=str(raw.get("provenance", "")),
            notes=str(raw.get("notes", "")),
            max_sq_correlation=raw.get("max_sq_correlation"),
        )
    except KeyError as exc:
        raise ValidationError(f"missing field {exc.args[0]!r}") from None
    except (TypeError, ValueError) as exc:
        raise ValidationError(str(exc)) from None
    if "M" in raw and int(raw["M"]) != ds.size:
        raise ValidationError(f"M={raw['M']} but {ds.size} elements listed")
    if group_for(entry.base) is not ds.group:
        raise ValidationError(f"{ds.group.value} group cannot index {entry.base.value} rows")
    if not entry.almost:
        report = verify_difference_set(ds)
        if not report.is_difference_set:
            raise ValidationError("elements do not form a difference set")
        if ds.lam is not None and ds.lam != report.lam:
            raise ValidationError(f"claimed lambda={ds.lam} but the set has lambda={report.lam}")
    return entry


def parse_catalog(text: str, source: str = "<catalog>") -> list[CatalogEntry]:
    if not text.strip():
        return []
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{source}:{exc.lineno}: malformed JSON: {exc.msg}") from None
    if not isinstance(doc, dict) or "entries" not in doc:
        raise ValidationError(f"{source}:1: expected an object with an 'entries' list")
    if doc.get("version") != CATALOG_VERSION:
        raise ValidationError(f"{source}:1: unsupported catalog version {doc.get('version')!r}")
    lines = _entry_lines(text)
    entries, names = [], set()
    for i, raw in enumerate(doc["entries"]):
        line = lines[i] if i < len(lines) else 1
        try:
            entry = _parse_entry(raw)
        except ValidationError as exc:
            name = raw.get("name", f"#{i}") if isinstance(raw, dict) else f"#{i}"
            raise ValidationError(f"{source}:{line}: entry {name!r}: {exc}") from None
        if entry.name in names:
            raise ValidationError(f"{source}:{line}: duplicate entry name {entry.name!r}")
        names.add(entry.name)
        entries.append(entry)
    return entries


def load_catalog(path=None) -> list[CatalogEntry]:
    path = Path(path) if path is not None else default_catalog_path()
    return parse_catalog(path.read_text(), str(path))


def lookup(name: str, entries=None) -> CatalogEntry:
    entries = load_catalog() if entries is None else entries
    for entry in entries:
        if entry.name == name:
            return entry
    raise ValidationError(f"no catalog entry named {name!r}")


def dump_catalog(entries, path) -> None:
    doc = {"version": CATALOG_VERSION, "entries": [e.to_dict() for e in entries]}
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")


# ---------------------------------------------------------------------------
# difference-set search


class FindResult(NamedTuple):
    sets: list
    reason: Optional[str]


def _translate(elements, t, group: Group, n: int):
    if group is Group.BINARY:
        return tuple(sorted(e ^ t for e in elements))
    return tuple(sorted((e + t) % n for e in elements))


def translation_representative(elements, group: Group, n: int) -> tuple:
    group = Group(group)
    return min(_translate(elements, t, group, n) for t in range(n))


def find_difference_sets(group: Group, n: int, m: int) -> FindResult:
    """All ``(n, m, lambda)`` difference sets, one per translation class.

    Complements are not merged. Returns an empty list with a reason when the
    counting condition ``lambda = m(m-1)/(n-1)`` has no integer solution.
    """
    group = Group(group)
    if group is Group.BINARY and not (n >= 1 and n & (n - 1) == 0):
        raise ValidationError(f"binary group order {n} is not a power of two")
    if not 1 <= m <= n:
        raise ValidationError(f"need 1 <= M <= N, got M={m}, N={n}")
    if n > 1 and (m * (m - 1)) % (n - 1):
        return FindResult([], f"lambda = {m}*{m - 1}/{n - 1} is not an integer")
    lam = m * (m - 1) // (n - 1) if n > 1 else 0
    candidates = math.comb(n - 1, m - 1)
    if n > FIND_MAX_N or candidates > FIND_MAX_CANDIDATES:
        raise InfeasibleError(
            f"exhaustive difference-set search over {candidates} candidates (N={n}) is infeasible",
            size=candidates,
        )
    # every translation class has a member containing 0
    found = set()
    chunk = 50_000
    combos = itertools.combinations(range(1, n), m - 1)
    while True:
        block = list(itertools.islice(combos, chunk))
        if not block:
            break
        sets = np.concatenate(
            [np.zeros((len(block), 1), dtype=np.int64), np.array(block, dtype=np.int64).reshape(len(block), m - 1)],
            axis=1,
        )
        a, b = sets[:, :, None], sets[:, None, :]
        diffs = (a ^ b) if group is Group.BINARY else (a - b) % n
        offdiag = ~np.eye(m, dtype=bool)
        diffs = diffs[:, offdiag]  # (P, m(m-1))
        rows = np.repeat(np.arange(len(block)), diffs.shape[1])
        counts = np.bincount(rows * n + diffs.ravel(), minlength=len(block) * n).reshape(-1, n)
        ok = np.all(counts[:, 1:] == lam, axis=1)
        for s in sets[ok]:
            found.add(translation_representative(s.tolist(), group, n))
    out = []
    for s in sorted(found):
        report = verify_difference_set(DifferenceSet(group, n, s))
        assert report.is_difference_set
        out.append(s)
    return FindResult(out, None if out else "no difference set exists for these parameters")


# ---------------------------------------------------------------------------
# near-ETF row sets


def correlation_profile(base: Base, n: int, rows) -> np.ndarray:
    """Squared correlation between column 0 and every column of the row-selected frame.

    For DFT and Hadamard frames the correlation of columns ``j, k`` depends
    only on their group difference, so this vector determines the full
    squared correlation matrix.
    """
    w = build_base_matrix(base, n) * np.sqrt(n)
    rows = list(rows)
    v = w[rows].sum(axis=0) / len(rows)
    return np.abs(v) ** 2


def max_sq_correlation(base: Base, n: int, rows) -> float:
    return float(correlation_profile(base, n, rows)[1:].max())


def almost_set_search(base: Base, n: int, m: int, seed: int = 0, restarts: int = 20,
                      max_passes: int = 200) -> tuple[tuple[int, ...], float]:
    """Local search for ``m`` rows minimizing the maximum squared correlation.

    Single-element exchanges are accepted when they lower the maximum, or keep
    it and lower the fourth moment of the correlation profile. The best of
    ``restarts`` seeded random starts is returned with its maximum.
    """
    base = Base(base)
    w = build_base_matrix(base, n) * np.sqrt(n)
    rng = np.random.default_rng(seed)

    def score(rows):
        prof = np.abs(w[rows].sum(axis=0) / m) ** 2
        tail = prof[1:]
        return (round(float(tail.max()), 12), float(np.sum(tail**2)))

    best = None
    for _ in range(restarts):
        rows = sorted(int(x) for x in rng.choice(n, size=m, replace=False))
        current = score(rows)
        for _ in range(max_passes):
            improved = False
            for slot in rng.permutation(m):
                for new in rng.permutation(n):
                    if new in rows:
                        continue
                    trial = rows.copy()
                    trial[slot] = int(new)
                    s = score(trial)
                    if s < current:
                        rows, current, improved = sorted(trial), s, True
                        break
            if not improved:
                break
        if best is None or current < best[1]:
            best = (tuple(rows), current)
    return best[0], best[1][0]
