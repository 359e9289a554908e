"""Baseline vs SamplePairing final validation error, averaged over seeds.

    python3 scripts/gain.py --cifar-dir /data/cifar-10-batches-bin --seeds 0 1 2
    python3 scripts/gain.py --synthetic --n-per-class 10 --seeds 0 1 2

With ``--cifar-dir`` this is the reduced-CIFAR protocol: reduced network,
100 images per class, 300 epochs, pairing from epoch 100 on an 8-on/2-off
cycle, fine-tuning from epoch 260, baseline with pairing never enabled.
Each run writes its own directory under ``--out``.
"""

import argparse
import json
import logging
from pathlib import Path

import numpy as np

from samplepairing.harness import prepare_data, run_experiment
from samplepairing.harness.presets import baseline_of, cifar_desk, synthetic_gain


def main():
    p = argparse.ArgumentParser()
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--cifar-dir")
    src.add_argument("--synthetic", action="store_true")
    p.add_argument("--n-per-class", type=int, default=100)
    p.add_argument("--epochs", type=int)
    p.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2])
    p.add_argument("--out", default="runs/gain")
    p.add_argument("-v", "--verbose", action="store_true")
    args = p.parse_args()
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(asctime)s %(message)s")

    kw = {} if args.epochs is None else {"epochs": args.epochs}
    rows = []
    for seed in args.seeds:
        if args.synthetic:
            cfg = synthetic_gain(args.n_per_class, **kw)
            base = synthetic_gain(args.n_per_class, pairing=False, **kw)
        else:
            cfg = cifar_desk(args.cifar_dir, args.n_per_class, **kw)
            base = baseline_of(cfg)
        cfg, base = cfg.with_seeds(seed, seed, seed), base.with_seeds(seed, seed, seed)
        data = prepare_data(cfg)
        out = Path(args.out) / f"seed{seed}"
        err_pair = run_experiment(cfg, out_dir=out / "pairing", data=data).log.records[-1].val_err
        err_base = run_experiment(base, out_dir=out / "baseline", data=data).log.records[-1].val_err
        rows.append({"seed": seed, "baseline": err_base, "pairing": err_pair, "gap": err_base - err_pair})
        print(f"seed {seed}: baseline {err_base:.4f}  pairing {err_pair:.4f}  gap {100 * (err_base - err_pair):+.2f} pts",
              flush=True)
    mean_gap = float(np.mean([r["gap"] for r in rows]))
    print(f"mean gap {100 * mean_gap:+.2f} points over {len(rows)} seeds")
    Path(args.out).mkdir(parents=True, exist_ok=True)
    (Path(args.out) / "summary.json").write_text(json.dumps({"runs": rows, "mean_gap": mean_gap}, indent=2) + "\n")


if __name__ == "__main__":
    main()
