"""Training accuracy while pairing is always on, against 0.5 + 1/(2N).

    python3 scripts/ceiling.py --seed 0 --epochs 120
"""

import argparse

import numpy as np

from samplepairing.harness import run_experiment
from samplepairing.harness.presets import synthetic_ceiling
from samplepairing.schedule import theoretical_max_training_accuracy


def main():
    p = argparse.ArgumentParser()
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epochs", type=int, default=120)
    p.add_argument("--out")
    args = p.parse_args()
    cfg = synthetic_ceiling(args.epochs).with_seeds(args.seed, args.seed, args.seed)
    bound = theoretical_max_training_accuracy(cfg.dataset.n_classes)

    def show(rec):
        if rec.epoch % 10 == 0 or rec.epoch == cfg.epochs - 1:
            print(f"epoch {rec.epoch:4d}  train acc {1 - rec.train_err:.4f}  val err {rec.val_err:.4f}", flush=True)

    result = run_experiment(cfg, out_dir=args.out, epoch_callback=show)
    last = [1 - r.train_err for r in result.log.records[-20:]]
    print(f"last 20 epochs: mean train acc {np.mean(last):.4f}, max {max(last):.4f}; ceiling {bound:.4f}")


if __name__ == "__main__":
    main()
