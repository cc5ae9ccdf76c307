"""Frame files and report/curve serialization.

Frame file (line oriented)::

    frame v1 base=hadamard N=16 M=6 NB=4 NA=2
    rows: 0,2,5,6,14,15
    perm: 0,1,2,...,15

Frames without a recipe are written with ``base=none`` and a ``matrix``
section of ``M`` lines holding ``N`` comma-separated ``re+imj`` values.
``NA`` is optional on input and defaults to ``NB``.
"""

from __future__ import annotations

import csv
import io
import json
import re
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from . import __version__
from .erasure import BlockModel
from .errors import ValidationError
from .frames import Frame, FrameSpec, construct_frame

_HEADER = re.compile(r"^frame\s+v1\s+(?P<fields>.*)$")


def _format_complex(z: complex) -> str:
    # format(x, "+") keeps the shortest round-trip repr
    return f"{format(z.real, '')}{format(z.imag, '+')}j"


def format_frame(frame: Frame) -> str:
    b = frame.blocks
    spec = frame.spec
    base = spec.base.value if spec is not None else "none"
    lines = [f"frame v1 base={base} N={frame.n} M={frame.m} NB={b.num_blocks} NA={b.active_blocks}"]
    if spec is not None:
        lines.append("rows: " + ",".join(str(r) for r in spec.rows))
        lines.append("perm: " + ",".join(str(p) for p in spec.perm))
    else:
        entries = np.asarray(frame.entries, dtype=complex)
        lines.append("matrix")
        for row in entries:
            lines.append(",".join(_format_complex(z) for z in row))
    return "\n".join(lines) + "\n"


def _int_list(text: str, what: str, lineno: int) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ValidationError(f"line {lineno}: malformed {what} list") from None


def parse_frame(text: str, active_blocks: Optional[int] = None) -> Frame:
    """Parse a frame file; ``active_blocks`` overrides the file's ``NA``."""
    lines = [ln.strip() for ln in text.splitlines()]
    lines = [(i + 1, ln) for i, ln in enumerate(lines) if ln and not ln.startswith("#")]
    if not lines:
        raise ValidationError("empty frame file")
    lineno, head = lines[0]
    match = _HEADER.match(head)
    if not match:
        raise ValidationError(f"line {lineno}: expected 'frame v1 ...' header")
    fields = {}
    for token in match.group("fields").split():
        key, _, value = token.partition("=")
        fields[key] = value
    try:
        n, m, nb = int(fields["N"]), int(fields["M"]), int(fields["NB"])
        na = int(fields.get("NA", nb))
        base = fields["base"]
    except (KeyError, ValueError) as exc:
        raise ValidationError(f"line {lineno}: bad or missing header field {exc}") from None
    if active_blocks is not None:
        na = active_blocks
    if nb < 1 or n % nb:
        raise ValidationError(f"line {lineno}: N={n} is not divisible by NB={nb}")
    blocks = BlockModel(nb, n // nb, na)
    body = dict()
    matrix_rows = []
    in_matrix = False
    for lineno, ln in lines[1:]:
        if in_matrix:
            try:
                matrix_rows.append([complex(x.strip()) for x in ln.split(",")])
            except ValueError:
                raise ValidationError(f"line {lineno}: malformed matrix entry") from None
        elif ln == "matrix":
            in_matrix = True
        else:
            key, sep, value = ln.partition(":")
            if not sep or key not in ("rows", "perm"):
                raise ValidationError(f"line {lineno}: unexpected content {ln!r}")
            body[key] = _int_list(value, key, lineno)
    if in_matrix:
        entries = np.array(matrix_rows)
        if entries.shape != (m, n):
            raise ValidationError(f"matrix section is {entries.shape}, header says ({m}, {n})")
        return Frame(entries, blocks)
    if base == "none":
        raise ValidationError("base=none requires a matrix section")
    if "rows" not in body or "perm" not in body:
        raise ValidationError("frame file needs 'rows:' and 'perm:' lines")
    spec = FrameSpec(base, n, m, tuple(body["rows"]), tuple(body["perm"]), blocks)
    return construct_frame(spec)


def write_frame(frame: Frame, path) -> None:
    Path(path).write_text(format_frame(frame))


def read_frame(path, active_blocks: Optional[int] = None) -> Frame:
    return parse_frame(Path(path).read_text(), active_blocks)


# ---------------------------------------------------------------------------
# reports


def provenance(config_hash: str, seed) -> dict:
    return {"toolkit": "blockframes", "version": __version__, "config_hash": config_hash,
            "seed": seed}


def dump_json(payload: dict, path=None) -> str:
    text = json.dumps(payload, indent=2, sort_keys=True, default=_json_default) + "\n"
    if path is not None:
        Path(path).write_text(text)
    return text


def _json_default(obj):
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def write_csv(header: list[str], rows: Iterable, path=None, meta: Optional[dict] = None) -> str:
    buf = io.StringIO()
    if meta:
        buf.write("# " + " ".join(f"{k}={v}" for k, v in meta.items()) + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in row])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text


def read_csv(path) -> list[dict]:
    lines = [ln for ln in Path(path).read_text().splitlines() if not ln.startswith("#")]
    return list(csv.DictReader(lines))
