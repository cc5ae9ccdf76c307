"""N=16 Hadamard case study: canonical ETF vs PETF vs BUTF.

Frame rows {0,2,5,6,14,15}, 4 blocks of 4 columns, 2 blocks active, 30 dB.

    python scripts/case_study.py [--out results/case_study] [--seed 0]
"""

import argparse
import time
import warnings
from pathlib import Path

from blockframes.catalog import lookup
from blockframes.erasure import BlockModel
from blockframes.frames import FrameSpec, construct_frame, squared_correlation_matrix
from blockframes.io import dump_json, provenance, write_csv
from blockframes.metrics import ChannelParams, average_capacity, desired_structure_deviation
from blockframes.search import (
    SearchConfig, config_hash, search_butf, search_petf, spec_from_dict, spec_to_dict,
)

BLOCKS = BlockModel(4, 4, 2)
SNR_DB = 30.0
# printed one-based column permutations of the reference experiment
PETF_PI = (2, 4, 7, 11, 10, 9, 14, 3, 15, 13, 1, 5, 12, 8, 6, 16)
BUTF_PI = (7, 6, 12, 9, 2, 1, 8, 15, 5, 4, 3, 13, 16, 14, 10, 11)
# the printed BUTF row set has 7 elements for M=6; this 6-subset is its best
BUTF_ROWS = (3, 4, 6, 7, 9, 13)


def evaluate(spec, channel):
    frame = construct_frame(spec)
    rep = average_capacity(frame, channel)
    dev = desired_structure_deviation(frame)
    return {"spec": spec_to_dict(spec), "capacity": rep.mean, "outage_0.98": rep.outage[0.98],
            "intra_rms": dev.intra_rms}


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="results/case_study")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--restarts", type=int, default=8)
    parser.add_argument("--iters", type=int, default=2000)
    args = parser.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    warnings.filterwarnings("ignore", message="K=8 active columns")  # K > M by design here
    channel = ChannelParams.from_db(SNR_DB)
    entry = lookup("hadamard-16-6")
    rows = entry.difference_set.elements
    results = {}

    canonical = FrameSpec.canonical("hadamard", 16, rows, BLOCKS)
    results["etf"] = evaluate(canonical, channel)

    results["petf_printed"] = evaluate(canonical.with_perm(tuple(p - 1 for p in PETF_PI)), channel)
    printed = FrameSpec("hadamard", 16, 6, BUTF_ROWS, tuple(p - 1 for p in BUTF_PI), BLOCKS)
    results["butf_printed"] = evaluate(printed, channel)

    t = time.perf_counter()
    petf = search_petf("hadamard", entry.difference_set, BLOCKS,
                       SearchConfig(channel, mode="exhaustive", seed=args.seed))
    results["petf"] = evaluate(petf.best_spec, channel)
    results["petf"].update(evaluations=petf.evaluations, seconds=time.perf_counter() - t)

    t = time.perf_counter()
    cfg = SearchConfig(channel, restarts=args.restarts, iterations=args.iters, seed=args.seed)
    butf = search_butf("hadamard", BLOCKS, 6, cfg, initial=[petf.best_spec])
    results["butf"] = evaluate(butf.best_spec, channel)
    results["butf"].update(evaluations=butf.evaluations, seconds=time.perf_counter() - t)

    payload = {"blocks": str(BLOCKS), "snr_db": SNR_DB, "seed": args.seed,
               "restarts": args.restarts, "iters": args.iters}
    chash = config_hash(payload)
    timing = {k: v.pop("seconds") for k, v in results.items() if "seconds" in v}
    dump_json({"provenance": provenance(chash, args.seed), "config": payload, "frames": results},
              out / "case_study.json")
    dump_json({"seconds": timing}, out / "case_study.timing.json")
    write_csv(["frame", "capacity", "outage_0.98", "intra_rms"],
              [(k, v["capacity"], v["outage_0.98"], v["intra_rms"]) for k, v in results.items()],
              out / "case_study.csv", {"config_hash": chash, "seed": args.seed})

    for name in ("etf", "petf", "butf"):
        spec = spec_from_dict(results[name]["spec"])
        corr = squared_correlation_matrix(construct_frame(spec))  # block order
        write_csv([f"c{j}" for j in range(16)], corr.tolist(), out / f"{name}_sqcorr.csv")

    for name, r in results.items():
        print(f"{name:<18} capacity {r['capacity']:8.4f}  outage {r['outage_0.98']:.4f}  "
              f"rows {r['spec']['rows']}  perm {r['spec']['perm']}")
    for name, sec in timing.items():
        print(f"{name} search: {sec:.1f} s")


if __name__ == "__main__":
    main()
