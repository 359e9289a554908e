"""Run every config of a named preset and tabulate final errors.

    python3 scripts/run_preset.py selection_method --cifar-dir /data/cifar-10-batches-bin
    python3 scripts/run_preset.py synthetic_gain --seed 1
"""

import argparse
import json
import logging
from dataclasses import replace
from pathlib import Path

from samplepairing.harness import run_experiment
from samplepairing.harness.presets import PRESET_NAMES, preset


def main():
    p = argparse.ArgumentParser()
    p.add_argument("name", choices=PRESET_NAMES)
    p.add_argument("--cifar-dir")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epochs", type=int, help="override for quick looks")
    p.add_argument("--only", nargs="*", help="run just these keys of the grid")
    p.add_argument("--out", default="runs")
    p.add_argument("-v", "--verbose", action="store_true")
    args = p.parse_args()
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(asctime)s %(message)s")

    grid = preset(args.name, args.cifar_dir)
    summary = {}
    for key, cfg in grid.items():
        if args.only and key not in args.only:
            continue
        cfg = cfg.with_seeds(args.seed, args.seed, args.seed)
        if args.epochs is not None:
            cfg = replace(cfg, epochs=args.epochs)
        result = run_experiment(cfg, out_dir=Path(args.out) / args.name / f"{key}-seed{args.seed}")
        last = result.log.records[-1]
        summary[key] = {"val_err": last.val_err, "train_err": last.train_err}
        print(f"{key:24s} val_err {last.val_err:.4f}  train_err {last.train_err:.4f}", flush=True)
    out = Path(args.out) / args.name / f"summary-seed{args.seed}.json"
    out.write_text(json.dumps(summary, indent=2) + "\n")
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
