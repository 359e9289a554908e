"""Command line entry point: ``samplepairing {train,eval,gradcheck,schedule-dump,presets}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from samplepairing.data import load_cifar10
from samplepairing.harness import evaluate, load_config, run_experiment, save_config
from samplepairing.harness.presets import PRESET_NAMES, preset
from samplepairing.harness.runner import prepare_data
from samplepairing.nn import grad_check, load_checkpoint, tiny_spec
from samplepairing.schedule import ScheduleConfig, enabled_fraction, phase_at


def _cmd_train(args) -> int:
    cfg = load_config(args.config)
    cfg = cfg.with_seeds(args.seed_data, args.seed_init, args.seed_augment)
    if args.seed is not None:
        cfg = cfg.with_seeds(args.seed, args.seed, args.seed)
    if args.epochs is not None:
        cfg = replace(cfg, epochs=args.epochs)
    if args.cifar_dir is not None:
        cfg = replace(cfg, dataset=replace(cfg.dataset, path=args.cifar_dir))
    result = run_experiment(cfg, out_dir=args.out)
    if result.log.records:
        last = result.log.records[-1]
        print(f"{cfg.name}: {len(result.log)} epochs, final val_err {last.val_err:.4f}, "
              f"train_err {last.train_err:.4f}")
    print(f"wrote {Path(args.out) / 'metrics.csv'}")
    return 0


def _cmd_eval(args) -> int:
    net, _, _ = load_checkpoint(args.checkpoint)
    if args.dataset is not None:
        _, val = load_cifar10(args.dataset)
    elif args.config is not None:
        val = prepare_data(load_config(args.config)).val
    else:
        print("eval needs --dataset or --config", file=sys.stderr)
        return 2
    err, loss = evaluate(net, val)
    print(json.dumps({"error_rate": err, "mean_loss": loss, "n": len(val)}))
    return 0


def _cmd_gradcheck(args) -> int:
    spec = tiny_spec(n_classes=args.classes, width=args.width)
    report = grad_check(spec, tolerance=args.tolerance, rng=args.seed, batch=args.batch)
    print(report)
    print("passed" if report.passed else "FAILED")
    return 0 if report.passed else 1


def _cmd_schedule_dump(args) -> int:
    if args.config is not None:
        sched = load_config(args.config).schedule
    else:
        sched = ScheduleConfig(args.warmup, args.on, args.off, args.finetune, args.unit)
    length = args.length if args.length is not None else sched.finetune_start + 2 * (sched.on_span + sched.off_span)
    print(f"# enabled fraction {enabled_fraction(sched)}")
    print("t,phase")
    for t in range(length):
        print(f"{t},{phase_at(t, sched).value}")
    return 0


def _cmd_presets(args) -> int:
    if args.name is None:
        print("\n".join(PRESET_NAMES))
        return 0
    grid = preset(args.name, args.cifar_dir)
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    for key, cfg in grid.items():
        path = out / f"{args.name}__{key}.json"
        save_config(cfg, path)
        print(path)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="samplepairing")
    p.add_argument("-v", "--verbose", action="store_true", help="log every epoch")
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", help="run one experiment config")
    t.add_argument("--config", required=True)
    t.add_argument("--out", required=True, help="directory for metrics.csv, manifest.json, checkpoint.npz")
    t.add_argument("--seed", type=int, help="set all three seeds")
    t.add_argument("--seed-data", type=int)
    t.add_argument("--seed-init", type=int)
    t.add_argument("--seed-augment", type=int)
    t.add_argument("--epochs", type=int)
    t.add_argument("--cifar-dir", help="override dataset.path")
    t.set_defaults(func=_cmd_train)

    e = sub.add_parser("eval", help="error rate of a checkpoint on centre patches")
    e.add_argument("--checkpoint", required=True)
    e.add_argument("--dataset", help="CIFAR-10 binary directory (test split is used)")
    e.add_argument("--config", help="experiment config whose validation split is used")
    e.set_defaults(func=_cmd_eval)

    g = sub.add_parser("gradcheck", help="finite-difference check of the shrunk network")
    g.add_argument("--width", type=int, default=4)
    g.add_argument("--classes", type=int, default=3)
    g.add_argument("--batch", type=int, default=16)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--tolerance", type=float, default=1e-4)
    g.set_defaults(func=_cmd_gradcheck)

    s = sub.add_parser("schedule-dump", help="print the phase of every epoch (or image)")
    s.add_argument("--config")
    s.add_argument("--warmup", type=int, default=100)
    s.add_argument("--on", type=int, default=8)
    s.add_argument("--off", type=int, default=2)
    s.add_argument("--finetune", type=int, default=260)
    s.add_argument("--unit", choices=("epochs", "images"), default="epochs")
    s.add_argument("--length", type=int)
    s.set_defaults(func=_cmd_schedule_dump)

    r = sub.add_parser("presets", help="list presets, or write a preset's configs")
    r.add_argument("name", nargs="?")
    r.add_argument("--cifar-dir")
    r.add_argument("--out")
    r.set_defaults(func=_cmd_presets)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
