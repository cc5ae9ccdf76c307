"""Command-line front end.

    blockframes [--seed S] [--threads T] [--out-dir D] [--format json|csv]
                [--config FILE] {construct,eval,spectrum,search,catalog} ...

Exit codes: 0 success, 2 invalid input, 3 infeasible request, 4 numerical
failure. Every artifact carries the toolkit version, a hash of the resolved
experiment configuration and the seed; reruns with the same inputs write
byte-identical files.
"""

from __future__ import annotations

import argparse
import hashlib
import logging
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .catalog import (
    CatalogEntry,
    find_difference_sets,
    load_catalog,
    lookup,
    max_sq_correlation,
)
from .erasure import BlockModel, auto_mode, ratios
from .errors import BlockFramesError, InfeasibleError, NumericalError, ValidationError
from .frames import (
    Base,
    Frame,
    FrameSpec,
    construct_frame,
    mean_offdiagonal,
    squared_correlation_matrix,
    tightness,
    verify_difference_set,
    welch_bounds,
)
from .io import dump_json, format_frame, provenance, read_frame, write_csv
from .metrics import (
    DEFAULT_OUTAGE_FRACTION,
    ChannelParams,
    average_capacity,
    stc_error_bound,
)
from .search import SearchConfig, config_hash, search_butf, search_petf, spec_to_dict
from .spectra import SpectralModel, empirical_spectrum, kl_divergence, kl_edges

log = logging.getLogger("blockframes")

EXIT_OK, EXIT_VALIDATION, EXIT_INFEASIBLE, EXIT_NUMERICAL = 0, 2, 3, 4

# flags that never change results and stay out of the config hash; frame
# files enter through their content digest instead of their path
_RUNTIME_KEYS = {"out_dir", "threads", "format", "config", "verbose", "func", "resume",
                 "checkpoint", "frame", "init"}


@dataclass
class ExperimentConfig:
    """Resolved, serializable description of one command invocation."""

    command: str
    seed: int
    params: dict = field(default_factory=dict)
    sources: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)

    @property
    def hash(self) -> str:
        return config_hash(self.to_dict())

    def provenance(self) -> dict:
        return provenance(self.hash, self.seed)

    def meta(self) -> dict:
        p = self.provenance()
        return {"toolkit": p["toolkit"], "version": p["version"],
                "config_hash": p["config_hash"], "seed": p["seed"]}


def _experiment(args, sources=()) -> ExperimentConfig:
    params = {}
    for key, value in sorted(vars(args).items()):
        if key in _RUNTIME_KEYS or key in ("seed", "command"):
            continue
        params[key] = value
    return ExperimentConfig(args.command, args.seed, params, list(sources))


# ---------------------------------------------------------------------------
# argument helpers


def _blocks(text: str) -> BlockModel:
    try:
        return BlockModel.parse(text)
    except ValidationError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(x) for x in text.replace(" ", "").split(",") if x)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _snr_grid(values) -> list[float]:
    """Expand ``--snr-db`` values; ``a:b:step`` is an inclusive range."""
    out = []
    for v in values:
        parts = str(v).split(":")
        try:
            if len(parts) == 1:
                out.append(float(parts[0]))
                continue
            if len(parts) != 3:
                raise ValueError
            lo, hi, step = (float(p) for p in parts)
        except ValueError:
            raise ValidationError(f"bad SNR value {v!r}; use X or START:STOP:STEP") from None
        if step <= 0 or hi < lo:
            raise ValidationError(f"bad SNR range {v!r}")
        count = int(np.floor((hi - lo) / step + 1e-9)) + 1
        out.extend(round(lo + i * step, 10) for i in range(count))
    return out


def _labelled(text: str) -> tuple[Optional[str], str]:
    label, sep, value = text.partition("=")
    return (label, value) if sep else (None, text)


@dataclass
class _Source:
    label: str
    frame: Frame
    origin: dict


def _catalog_entries(args):
    return load_catalog(getattr(args, "catalog", None))


def _frame_from_entry(entry: CatalogEntry, blocks: Optional[BlockModel]) -> Frame:
    if blocks is None:
        raise ValidationError(f"--blocks is required to build a frame from catalog entry {entry.name!r}")
    spec = FrameSpec.canonical(entry.base, entry.n, entry.difference_set.elements, blocks)
    return construct_frame(spec)


def _file_digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()[:16]


def _load_sources(args) -> list[_Source]:
    sources = []
    blocks = getattr(args, "blocks", None)
    entries = None
    for text in getattr(args, "frame", None) or []:
        label, path = _labelled(text)
        if not Path(path).is_file():
            raise ValidationError(f"frame file {path!r} does not exist")
        frame = read_frame(path)
        if blocks is not None:
            if blocks.n != frame.n:
                raise ValidationError(f"--blocks {blocks} has N={blocks.n} but {path} has N={frame.n}")
            frame = frame.with_blocks(blocks)
        sources.append(_Source(label or Path(path).stem, frame,
                               {"label": label or Path(path).stem, "sha256": _file_digest(path)}))
    for text in getattr(args, "set", None) or []:
        label, name = _labelled(text)
        entries = entries if entries is not None else _catalog_entries(args)
        entry = lookup(name, entries)
        sources.append(_Source(label or name, _frame_from_entry(entry, blocks), {"catalog": name}))
    if not sources:
        raise ValidationError("no frame given; use --frame PATH or --set NAME")
    return sources


# ---------------------------------------------------------------------------
# construct


def _require_blocks(args) -> BlockModel:
    if args.blocks is None:
        raise ValidationError("--blocks NB:NV:NA is required")
    return args.blocks


def cmd_construct(args) -> int:
    _require_blocks(args)
    entry = None
    if args.set:
        entry = lookup(args.set, _catalog_entries(args))
        base = Base(args.base) if args.base else entry.base
        if base is not entry.base:
            raise ValidationError(f"catalog entry {entry.name!r} indexes {entry.base.value} rows, not {base.value}")
        rows = entry.difference_set.elements
        n = entry.n
    else:
        if not (args.rows and args.n and args.base):
            raise ValidationError("give --set NAME, or --base, --n and --rows")
        base, rows, n = Base(args.base), args.rows, args.n
    blocks = args.blocks
    if blocks.n != n:
        raise ValidationError(f"--blocks {blocks} has N={blocks.n}, the row set lives in N={n}")
    perm = args.perm if args.perm is not None else tuple(range(n))
    spec = FrameSpec(base, n, len(rows), tuple(rows), tuple(perm), blocks)
    frame = construct_frame(spec)

    corr = squared_correlation_matrix(frame)
    off = corr[~np.eye(n, dtype=bool)]
    wb = welch_bounds(n, frame.m)
    tf = tightness(frame)
    report = {
        "provenance": _experiment(args).provenance(),
        "spec": spec_to_dict(spec),
        "welch": {
            "average_bound": wb.average_bound,
            "epsilon_wb": wb.epsilon_wb,
            "mean_sq_correlation": mean_offdiagonal(corr),
            "max_sq_correlation": float(off.max()) if off.size else 0.0,
            "min_sq_correlation": float(off.min()) if off.size else 0.0,
        },
        "frame_bounds": {"a": tf.a, "b": tf.b, "tight": tf.is_tight, "untf": tf.is_untf},
    }
    out_dir = _out_dir(args)
    name = args.name or (entry.name if entry else f"{base.value}-{n}-{len(rows)}")
    path = out_dir / f"{name}.frame"
    path.write_text(format_frame(frame))
    _emit_report(args, report, out_dir / f"{name}_welch")
    w = report["welch"]
    print(f"wrote {path}")
    print(f"Welch bound (mean and max sq. correlation): {w['epsilon_wb']:.10g}")
    print(f"achieved mean {w['mean_sq_correlation']:.10g}, max {w['max_sq_correlation']:.10g}, "
          f"UNTF={tf.is_untf}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# eval


def reference_capacities(blocks: BlockModel, m: int, channel: ChannelParams) -> dict:
    """``K * E[log2(1 + snr * lambda)]`` under the MANOVA and MP laws."""
    r = ratios(blocks, m)
    manova = SpectralModel.manova(r.beta, r.gamma)
    mp = SpectralModel.marchenko_pastur(r.beta)
    k = blocks.k
    return {"manova": k * manova.expected_log2(channel.snr_linear),
            "mp": k * mp.expected_log2(channel.snr_linear)}


def _evaluate(source: _Source, snrs, metric, fractions, mc, seed, per_selection):
    frame = source.frame
    b = frame.blocks
    r = ratios(b, frame.m)
    base = {"label": source.label, "N": frame.n, "M": frame.m, "K": b.k,
            "blocks": str(b), "beta_inv": 1.0 / r.beta, "gamma": r.gamma, "p": r.p}
    mode = auto_mode(b, mc, seed)
    points, skipped = [], []
    if metric == "stc" and b.k < frame.m:
        skipped.append({**base, "reason": f"STC bound needs M <= K (M={frame.m}, K={b.k})"})
        return points, skipped
    for snr_db in snrs:
        ch = ChannelParams.from_db(snr_db)
        pt = dict(base, snr_db=snr_db)
        if metric == "capacity":
            rep = average_capacity(frame, ch, mode, fractions)
            pt.update(mean=rep.mean, orthogonality_bound=rep.orthogonality_bound,
                      outage={f"{f:g}": v for f, v in rep.outage.items()},
                      reference=reference_capacities(b, frame.m, ch))
        else:
            rep = stc_error_bound(frame, ch, mode)
            pt.update(bound_mean=rep.bound_mean, orthogonality_bound=rep.orthogonality_bound)
        pt["selections"] = int(len(rep.selections))
        if per_selection:
            pt["per_selection"] = [
                {"selection": ",".join(map(str, s)), "value": v} for s, v in rep.per_selection
            ]
        points.append(pt)
    return points, skipped


def cmd_eval(args) -> int:
    sources = _load_sources(args)
    snrs = _snr_grid(args.snr_db or ["30"])
    fractions = tuple(args.fraction or [DEFAULT_OUTAGE_FRACTION])
    for s in sources:
        if args.metric == "capacity" and s.frame.blocks.k > s.frame.m:
            log.warning("%s: K=%d exceeds M=%d; evaluating outside the K <= M regime",
                        s.label, s.frame.blocks.k, s.frame.m)

    def job(s):
        return _evaluate(s, snrs, args.metric, fractions, args.mc, args.seed, args.per_selection)

    with warnings.catch_warnings():
        warnings.filterwarnings("ignore", message=r"K=\d+ active columns exceed")
        if args.threads > 1 and len(sources) > 1:
            with ThreadPoolExecutor(args.threads) as pool:
                results = list(pool.map(job, sources))
        else:
            results = [job(s) for s in sources]
    points = [p for pts, _ in results for p in pts]
    skipped = [s for _, sk in results for s in sk]
    for s in skipped:
        log.warning("skipped %s: %s", s["label"], s["reason"])

    sweep = args.sweep
    if sweep == "auto":
        sweep = "snr" if len(snrs) > 1 else "beta"
    exp = _experiment(args, [s.origin for s in sources])
    out_dir = _out_dir(args)
    meta = exp.meta()
    x_key = "snr_db" if sweep == "snr" else "beta_inv"
    curves = _eval_curves(points, args.metric, x_key, fractions)
    for name, rows in curves.items():
        write_csv(["x", "series", "value"], rows, out_dir / f"{args.name}_{name}.csv",
                  dict(meta, x=x_key))
    report = {"provenance": exp.provenance(), "metric": args.metric, "sweep": sweep,
              "points": points, "skipped": skipped}
    _emit_report(args, report, out_dir / args.name)
    for p in points:
        value = p["mean"] if args.metric == "capacity" else p["bound_mean"]
        extra = ""
        if args.metric == "capacity":
            extra = " outage " + " ".join(f"{k}:{v:.4f}" for k, v in p["outage"].items())
        print(f"{p['label']:<24} M={p['M']:<3} beta_inv={p['beta_inv']:.4g} "
              f"snr={p['snr_db']:g} dB  {args.metric}={value:.6g}{extra}")
    return EXIT_OK


def _eval_curves(points, metric, x_key, fractions) -> dict:
    curves: dict[str, list] = {}
    if metric == "capacity":
        cap, out = [], []
        refs = {}
        for p in points:
            cap.append((p[x_key], p["label"], p["mean"]))
            for f in fractions:
                series = p["label"] if len(fractions) == 1 else f"{p['label']}@{f:g}"
                out.append((p[x_key], series, p["outage"][f"{f:g}"]))
            for kind, v in p["reference"].items():
                refs[(p[x_key], kind)] = v
            refs[(p[x_key], "orthogonality")] = p["orthogonality_bound"]
        cap.extend((x, kind, v) for (x, kind), v in refs.items())
        curves["capacity"] = sorted(cap, key=lambda t: (t[1], t[0]))
        curves["outage"] = sorted(out, key=lambda t: (t[1], t[0]))
    else:
        rows = [(p[x_key], p["label"], p["bound_mean"]) for p in points]
        bounds = {(p[x_key], f"orthogonality_M{p['M']}"): p["orthogonality_bound"] for p in points}
        rows.extend((x, s, v) for (x, s), v in bounds.items())
        curves["stc"] = sorted(rows, key=lambda t: (t[1], t[0]))
    return curves


# ---------------------------------------------------------------------------
# spectrum


def cmd_spectrum(args) -> int:
    sources = _load_sources(args)
    if len(sources) != 1:
        raise ValidationError("spectrum takes exactly one frame")
    src = sources[0]
    frame = src.frame
    b = frame.blocks
    if args.bins == 1:
        log.warning("a single histogram bin makes every KL divergence 0; the comparison is degenerate")
    r = ratios(b, frame.m)
    models = {"manova": SpectralModel.manova(r.beta, r.gamma),
              "mp": SpectralModel.marchenko_pastur(r.beta)}
    spectrum = empirical_spectrum(frame, auto_mode(b, args.mc, args.seed), bins=args.bins)
    exp = _experiment(args, [src.origin])
    meta = exp.meta()
    out_dir = _out_dir(args)
    stem = args.name or src.label

    eig_rows = [
        (sid, j, float(lam))
        for sid, eigs in enumerate(spectrum.eigenvalues)
        for j, lam in enumerate(eigs)
    ]
    write_csv(["selection_id", "eig_index", "lambda"], eig_rows, out_dir / f"{stem}_spectrum.csv",
              dict(meta, pad_zeros=spectrum.pad_zeros))
    kl = {}
    edges = kl_edges(models["manova"], spectrum, args.bins)
    binned = spectrum.rebin(edges)
    for kind, model in models.items():
        probs = model.bin_probabilities(edges)
        rows = [(edges[i], edges[i + 1], binned.masses[i], probs[i]) for i in range(args.bins)]
        write_csv(["bin_left", "bin_right", "mass", "model_mass"], rows,
                  out_dir / f"{stem}_histogram_{kind}.csv", dict(meta, model=kind))
        kl[kind] = kl_divergence(binned, model)
    report = {
        "provenance": exp.provenance(),
        "label": src.label,
        "N": frame.n, "M": frame.m, "K": b.k, "blocks": str(b),
        "beta": r.beta, "gamma": r.gamma, "p": r.p,
        "bins": args.bins, "degenerate": args.bins == 1,
        "selections": int(len(spectrum.selections)), "pad_zeros": spectrum.pad_zeros,
        "kl": kl,
        "support": {k: list(m.support) for k, m in models.items()},
    }
    _emit_report(args, report, out_dir / f"{stem}_kl")
    if args.gnuplot:
        (out_dir / f"{stem}_histogram.gp").write_text(_gnuplot_histogram(stem))
    print(f"{src.label}: KL to MANOVA {kl['manova']:.6g}, KL to MP {kl['mp']:.6g} "
          f"({len(spectrum.selections)} selections, {args.bins} bins)")
    return EXIT_OK


def _gnuplot_histogram(stem: str) -> str:
    return "\n".join([
        "set datafile separator ','",
        "set key top right",
        "set xlabel 'eigenvalue'",
        "set ylabel 'bin mass'",
        f"set output '{stem}_histogram.png'",
        "set terminal pngcairo size 800,500",
        f"plot '{stem}_histogram_manova.csv' every ::1 using (($1+$2)/2):3 with boxes title 'empirical', \\",
        f"     '{stem}_histogram_manova.csv' every ::1 using (($1+$2)/2):4 with lines title 'MANOVA', \\",
        f"     '{stem}_histogram_mp.csv' every ::1 using (($1+$2)/2):4 with lines title 'MP'",
        "",
    ])


# ---------------------------------------------------------------------------
# search


def cmd_search(args) -> int:
    channel = ChannelParams.from_db(args.snr_db)
    config = SearchConfig(
        channel=channel, mode=args.mode, restarts=args.restarts, iterations=args.iters,
        seed=args.seed, neighborhood=args.neighborhood, max_evaluations=args.max_evals,
        mc_count=args.mc, threads=args.threads,
    )
    blocks = _require_blocks(args)
    entries = _catalog_entries(args)
    checkpoint = Path(args.checkpoint) if args.checkpoint else None
    if checkpoint is not None:
        checkpoint.parent.mkdir(parents=True, exist_ok=True)
    if checkpoint is not None and checkpoint.exists() and not args.resume:
        log.info("starting fresh; discarding checkpoint %s (pass --resume to continue it)", checkpoint)
        checkpoint.unlink()
    sources = []
    if args.kind == "petf":
        if not args.set:
            raise ValidationError("petf search needs --set NAME for the row set")
        entry = lookup(args.set, entries)
        base = Base(args.base) if args.base else entry.base
        sources.append({"catalog": entry.name})
        result = search_petf(base, entry.difference_set, blocks, config, checkpoint)
    else:
        initial = []
        for text in args.init or []:
            if Path(text).is_file():
                frame = read_frame(text)
                if frame.spec is None or frame.n != blocks.n:
                    raise ValidationError(f"{text}: initial frame must be a recipe frame with N={blocks.n}")
                sp = frame.spec
                initial.append(FrameSpec(sp.base, sp.n, sp.m, sp.rows, sp.perm, blocks))
                sources.append({"init": "file", "sha256": _file_digest(text)})
            else:
                entry = lookup(text, entries)
                initial.append(FrameSpec.canonical(entry.base, entry.n, entry.difference_set.elements, blocks))
                sources.append({"init": "catalog", "catalog": entry.name})
        if args.m is None:
            if not initial:
                raise ValidationError("butf search needs --m or an --init frame")
            args.m = initial[0].m
        base = Base(args.base) if args.base else (initial[0].base if initial else None)
        if base is None:
            raise ValidationError("butf search needs --base")
        result = search_butf(base, blocks, args.m, config, initial, checkpoint)

    exp = _experiment(args, sources)
    out_dir = _out_dir(args)
    name = args.name or args.kind
    frame = construct_frame(result.best_spec)
    (out_dir / f"{name}.frame").write_text(format_frame(frame))
    report = {"provenance": exp.provenance(), "kind": args.kind, "config": config.to_dict(),
              **result.to_dict()}
    report.pop("trace")
    _emit_report(args, report, out_dir / name)
    write_csv(["iteration", "best_objective"], result.trace, out_dir / f"{name}_trace.csv", exp.meta())
    print(f"{args.kind}: objective {result.best_objective:.6f} after {result.evaluations} "
          f"evaluations (space {result.space_size})")
    print("perm: " + ",".join(map(str, result.best_spec.perm)))
    if args.kind == "butf":
        print("rows: " + ",".join(map(str, result.best_spec.rows)))
    return EXIT_OK


# ---------------------------------------------------------------------------
# catalog


def cmd_catalog(args) -> int:
    if args.action == "find":
        res = find_difference_sets(args.group, args.n, args.m)
        rows = [{"elements": ",".join(map(str, s))} for s in res.sets]
        if args.format == "json":
            print(dump_json({"group": args.group, "N": args.n, "M": args.m,
                             "sets": [list(s) for s in res.sets], "reason": res.reason}), end="")
        else:
            for r in rows:
                print(r["elements"])
        if res.reason:
            log.warning("%s", res.reason)
        return EXIT_OK
    entries = _catalog_entries(args)
    if args.action == "show":
        print(dump_json(lookup(args.name, entries).to_dict()), end="")
        return EXIT_OK
    records = []
    for e in entries:
        rec = {"name": e.name, "base": e.base.value, "N": e.n, "M": e.m,
               "lambda": e.difference_set.lam, "almost": e.almost}
        if args.action == "verify":
            if e.almost:
                worst = max_sq_correlation(e.base, e.n, e.difference_set.elements)
                ok = e.max_sq_correlation is None or abs(worst - e.max_sq_correlation) <= 1e-9
                rec.update(max_sq_correlation=worst, ok=ok)
            else:
                report = verify_difference_set(e.difference_set)
                eps = welch_bounds(e.n, e.m).epsilon_wb
                worst = max_sq_correlation(e.base, e.n, e.difference_set.elements)
                rec.update(max_sq_correlation=worst, epsilon_wb=eps,
                           ok=report.is_difference_set and abs(worst - eps) <= 1e-8)
        records.append(rec)
    if args.format == "json":
        print(dump_json({"entries": records}), end="")
    else:
        header = list(records[0]) if records else ["name"]
        print(write_csv(header, [[r.get(h) for h in header] for r in records]), end="")
    if args.action == "verify" and not all(r["ok"] for r in records):
        raise ValidationError("catalog verification failed: " +
                              ", ".join(r["name"] for r in records if not r["ok"]))
    return EXIT_OK


# ---------------------------------------------------------------------------
# plumbing


def _out_dir(args) -> Path:
    path = Path(args.out_dir)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _emit_report(args, report: dict, stem: Path) -> None:
    if args.format == "json":
        dump_json(report, Path(f"{stem}.json"))
        return
    flat = sorted(_flatten(report).items())
    write_csv(["key", "value"], flat, Path(f"{stem}.csv"))


def _flatten(obj, prefix="") -> dict:
    out = {}
    if isinstance(obj, dict):
        for k, v in obj.items():
            out.update(_flatten(v, f"{prefix}{k}."))
    elif isinstance(obj, list) and any(isinstance(v, (dict, list)) for v in obj):
        for i, v in enumerate(obj):
            out.update(_flatten(v, f"{prefix}{i}."))
    elif isinstance(obj, list):
        out[prefix[:-1]] = ",".join(str(v) for v in obj)
    else:
        out[prefix[:-1]] = obj
    return out


def _common_flags(parser, suppress: bool):
    default = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    parser.add_argument("--seed", type=int, default=default(0), help="master seed")
    parser.add_argument("--threads", type=int, default=default(1), help="worker threads")
    parser.add_argument("--out-dir", default=default("."), help="directory for artifacts")
    parser.add_argument("--format", choices=("json", "csv"), default=default("json"),
                        help="report format")
    parser.add_argument("--config", default=default(None), help="key=value file of defaults")
    parser.add_argument("-v", "--verbose", action="count", default=default(0))


def _frame_flags(parser, multi: bool):
    parser.add_argument("--frame", action="append", metavar="[LABEL=]PATH",
                        help="frame file" + (" (repeatable)" if multi else ""))
    parser.add_argument("--set", action="append", metavar="[LABEL=]NAME",
                        help="catalog entry, built with the canonical permutation")
    parser.add_argument("--blocks", type=_blocks, help="block model NB:NV:NA")
    parser.add_argument("--catalog", help="catalog file (default: bundled)")
    parser.add_argument("--mc", type=int, default=10_000,
                        help="Monte Carlo selections when enumeration exceeds the exact limit")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="blockframes",
        description="Frames for block erasure channels: construction, evaluation and search.",
    )
    _common_flags(parser, suppress=False)
    common = argparse.ArgumentParser(add_help=False)
    _common_flags(common, suppress=True)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("construct", parents=[common], help="build a frame file")
    p.add_argument("--base", choices=[b.value for b in Base])
    p.add_argument("--set", help="catalog entry holding the row set")
    p.add_argument("--n", type=int, help="frame length N (with --rows)")
    p.add_argument("--rows", type=_int_list, help="comma-separated row indices")
    p.add_argument("--perm", type=_int_list, help="zero-based column permutation")
    p.add_argument("--blocks", type=_blocks, help="block model NB:NV:NA (required)")
    p.add_argument("--catalog", help="catalog file (default: bundled)")
    p.add_argument("--name", help="output file stem")
    p.set_defaults(func=cmd_construct)

    p = sub.add_parser("eval", parents=[common], help="capacity / outage / STC bound curves")
    _frame_flags(p, multi=True)
    p.add_argument("--metric", choices=("capacity", "stc"), default="capacity")
    p.add_argument("--snr-db", action="append", metavar="X|A:B:STEP", help="SNR in dB (repeatable)")
    p.add_argument("--fraction", type=float, action="append", help="outage rate fraction")
    p.add_argument("--sweep", choices=("auto", "beta", "snr"), default="auto")
    p.add_argument("--per-selection", action="store_true")
    p.add_argument("--name", default="eval", help="output file stem")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("spectrum", parents=[common], help="eigenvalue histogram and KL report")
    _frame_flags(p, multi=False)
    p.add_argument("--bins", type=int, default=50)
    p.add_argument("--gnuplot", action="store_true", help="also write a gnuplot script")
    p.add_argument("--name", help="output file stem")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("search", parents=[common], help="PETF / BUTF search")
    p.add_argument("kind", choices=("petf", "butf"))
    p.add_argument("--base", choices=[b.value for b in Base])
    p.add_argument("--set", help="catalog row set (petf)")
    p.add_argument("--init", action="append", metavar="NAME|PATH",
                   help="starting frame for a butf restart (repeatable)")
    p.add_argument("--m", type=int, help="number of rows (butf)")
    p.add_argument("--blocks", type=_blocks, help="block model NB:NV:NA (required)")
    p.add_argument("--snr-db", type=float, default=30.0)
    p.add_argument("--mode", choices=("stochastic", "exhaustive"), default="stochastic")
    p.add_argument("--restarts", type=int, default=4)
    p.add_argument("--iters", type=int, default=2000)
    p.add_argument("--neighborhood", choices=("column", "row", "both"))
    p.add_argument("--max-evals", type=int)
    p.add_argument("--mc", type=int, default=10_000)
    p.add_argument("--checkpoint", help="checkpoint JSON path")
    p.add_argument("--resume", action="store_true", help="continue from an existing checkpoint")
    p.add_argument("--catalog", help="catalog file (default: bundled)")
    p.add_argument("--name", help="output file stem")
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("catalog", parents=[common], help="list, verify or search difference sets")
    p.add_argument("action", choices=("list", "verify", "show", "find"))
    p.add_argument("name", nargs="?", help="entry name (show)")
    p.add_argument("--catalog", help="catalog file (default: bundled)")
    p.add_argument("--group", choices=("cyclic", "binary"), default="cyclic")
    p.add_argument("--n", type=int)
    p.add_argument("--m", type=int)
    p.set_defaults(func=cmd_catalog)
    return parser


# ---------------------------------------------------------------------------
# config files


def read_config_file(path) -> dict:
    """``key = value`` lines; ``#`` starts a comment, quotes are stripped."""
    out = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ValidationError(f"cannot read config file {path}: {exc.strerror}") from None
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line or (line.startswith("[") and line.endswith("]")):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ValidationError(f"{path}:{lineno}: expected key = value")
        out[key.strip().replace("-", "_")] = value.strip().strip("\"'")
    return out


def _apply_config(parser, subparser, values: dict) -> None:
    actions = {a.dest: a for a in subparser._actions}
    defaults = {}
    for key, raw in values.items():
        action = actions.get(key)
        if action is None or key in ("help", "command", "config"):
            raise ValidationError(f"config key {key!r} is not an option of this command")
        if isinstance(action, argparse._StoreTrueAction):
            value = raw.lower() in ("1", "true", "yes", "on")
        elif isinstance(action, argparse._AppendAction):
            items = [v.strip() for v in raw.split(",") if v.strip()]
            value = [action.type(v) if action.type else v for v in items]
        else:
            value = action.type(raw) if action.type else raw
            if action.choices is not None and value not in action.choices:
                raise ValidationError(f"config key {key!r}: {raw!r} not in {sorted(action.choices)}")
        defaults[key] = value
    top = {a.dest for a in parser._actions}
    # shared flags live on the top-level parser so explicit flags still win
    parser.set_defaults(**{k: v for k, v in defaults.items() if k in top})
    subparser.set_defaults(**{k: v for k, v in defaults.items() if k not in top})


def parse_args(argv=None) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        subparsers = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
        sub = subparsers.choices[args.command]
        _apply_config(parser, sub, read_config_file(args.config))
        args = parser.parse_args(argv)
    return args


def main(argv=None) -> int:
    try:
        args = parse_args(argv)
    except BlockFramesError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except SystemExit as exc:  # argparse usage errors (2) and --help (0)
        return exc.code if isinstance(exc.code, int) else EXIT_VALIDATION
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except InfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ValidationError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
