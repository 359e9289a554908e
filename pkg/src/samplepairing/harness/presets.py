"""Named experiment grids.

Each preset maps run names to configs. CIFAR presets need the directory of
the binary distribution; they default to the desk-scale setting (reduced
network, 100 samples per class, 300 epochs, fine-tuning from epoch 260).
"""

from __future__ import annotations

from dataclasses import replace

from samplepairing.data import CIFAR10_SUPER_CLASSES
from samplepairing.harness.config import DatasetConfig, ExperimentConfig
from samplepairing.pairing import (
    LabelPolicy,
    MixWeightDistribution,
    PairingConfig,
    Selection,
    SelectionPolicy,
    WeightKind,
)
from samplepairing.schedule import ScheduleConfig

DESK_EPOCHS = 300
DESK_SCHEDULE = ScheduleConfig(warmup=100, on_span=8, off_span=2, finetune_start=260)
DESK_VAL_LIMIT = 2000


def no_pairing_schedule(epochs: int) -> ScheduleConfig:
    """Pairing never enabled: the whole run is warmup."""
    return ScheduleConfig(warmup=epochs, on_span=8, off_span=2, finetune_start=epochs)


def cifar_desk(cifar_dir: str, n_per_class: int = 100, name: str = "cifar-desk",
               epochs: int = DESK_EPOCHS, val_limit: int | None = DESK_VAL_LIMIT) -> ExperimentConfig:
    return ExperimentConfig(
        name=name,
        dataset=DatasetConfig(source="cifar10", path=cifar_dir, n_per_class=n_per_class,
                              val_limit=val_limit),
        pairing=PairingConfig(patch=(28, 28)),
        schedule=DESK_SCHEDULE,
        network="reduced",
        batch_size=100,
        epochs=epochs,
    )


def baseline_of(cfg: ExperimentConfig) -> ExperimentConfig:
    return replace(cfg, name=cfg.name + "-baseline", schedule=no_pairing_schedule(cfg.epochs))


def _with_pairing(cfg: ExperimentConfig, name: str, **changes) -> ExperimentConfig:
    return replace(cfg, name=name, pairing=replace(cfg.pairing, **changes))


def subset_size(cifar_dir: str, sizes=(10, 50, 100, 200, 500, 1000, 2000, 5000)) -> dict:
    """Baseline, pairing, and pairing with a held-out pool per subset size.

    The pool holds as many images as the training subset.
    """
    grid = {}
    for n in sizes:
        base = cifar_desk(cifar_dir, n, name=f"subset-n{n}")
        grid[f"n{n}-baseline"] = baseline_of(base)
        grid[f"n{n}-pairing"] = replace(base, name=f"subset-n{n}-pairing")
        if n < 5000:
            pooled = replace(base, dataset=replace(base.dataset, pool_size=10 * n))
            grid[f"n{n}-pool"] = _with_pairing(
                pooled, f"subset-n{n}-pool", selection=SelectionPolicy(Selection.NON_TRAINING_POOL))
    return grid


def selection_method(cifar_dir: str, n_per_class: int = 100) -> dict:
    base = cifar_desk(cifar_dir, n_per_class, name="selection")
    grid = {"baseline": baseline_of(base)}
    methods = {
        "A-entire": SelectionPolicy(Selection.ENTIRE),
        "B-same-class": SelectionPolicy(Selection.SAME_CLASS),
        "C-different-class": SelectionPolicy(Selection.DIFFERENT_CLASS),
        "D-same-super": SelectionPolicy(Selection.SAME_SUPER_CLASS, CIFAR10_SUPER_CLASSES),
        "E-different-super": SelectionPolicy(Selection.DIFFERENT_SUPER_CLASS, CIFAR10_SUPER_CLASSES),
    }
    for key, policy in methods.items():
        grid[key] = _with_pairing(base, f"selection-{key}", selection=policy)
    return grid


def label_policy(cifar_dir: str, n_per_class: int = 100) -> dict:
    base = cifar_desk(cifar_dir, n_per_class, name="labels")
    return {
        "baseline": baseline_of(base),
        "first-label": _with_pairing(base, "labels-first", labels=LabelPolicy.FIRST_ONLY),
        "both-labels": _with_pairing(base, "labels-both", labels=LabelPolicy.BLENDED),
    }


def mix_weight(cifar_dir: str, n_per_class: int = 100) -> dict:
    base = cifar_desk(cifar_dir, n_per_class, name="weights")
    dists = {
        "fixed-half": MixWeightDistribution(WeightKind.FIXED_HALF),
        "uniform": MixWeightDistribution(WeightKind.UNIFORM),
        "uniform-capped": MixWeightDistribution(WeightKind.UNIFORM_CAPPED_HALF),
        "beta-0.2": MixWeightDistribution(WeightKind.BETA, 0.2),
        "beta-0.4": MixWeightDistribution(WeightKind.BETA, 0.4),
    }
    grid = {"baseline": baseline_of(base)}
    for key, dist in dists.items():
        grid[key] = _with_pairing(base, f"weights-{key}", weights=dist)
    return grid


def on_off_ratio(cifar_dir: str, n_per_class: int = 100, on_spans=(10, 8, 6, 5, 4, 2)) -> dict:
    base = cifar_desk(cifar_dir, n_per_class, name="ratio")
    grid = {"baseline": baseline_of(base)}
    for on in on_spans:
        sched = replace(base.schedule, on_span=on, off_span=10 - on)
        grid[f"on{on}-off{10 - on}"] = replace(base, name=f"ratio-on{on}", schedule=sched)
    return grid


def full_cifar10(cifar_dir: str) -> dict:
    """Full training set; not part of the desk-scale budget."""
    base = cifar_desk(cifar_dir, None, name="full-cifar10", val_limit=None)
    return {"baseline": baseline_of(base), "pairing": replace(base, name="full-cifar10-pairing")}


# --------------------------------------------------------------------------
# Synthetic


def synthetic_ceiling(epochs: int = 120) -> ExperimentConfig:
    """Pairing on from the first epoch, never fine-tuned, on an easy
    10-class synthetic set that the reduced network can fit."""
    return ExperimentConfig(
        name="synthetic-ceiling",
        dataset=DatasetConfig(source="synthetic", n_classes=10, synthetic_per_class=100,
                              synthetic_test_per_class=20, image_size=16, difficulty=0.3),
        pairing=PairingConfig(patch=(14, 14)),
        schedule=ScheduleConfig(warmup=0, on_span=1, off_span=0, finetune_start=epochs),
        network="reduced",
        batch_size=50,
        epochs=epochs,
    )


def synthetic_smoke(epochs: int = 6) -> ExperimentConfig:
    """A few seconds of training touching every phase."""
    return ExperimentConfig(
        name="synthetic-smoke",
        dataset=DatasetConfig(source="synthetic", n_classes=4, synthetic_per_class=20,
                              synthetic_test_per_class=10, image_size=12, difficulty=0.5),
        pairing=PairingConfig(patch=(10, 10)),
        schedule=ScheduleConfig(warmup=1, on_span=2, off_span=1, finetune_start=5),
        network="reduced",
        batch_size=16,
        epochs=epochs,
    )


def synthetic_gain(n_per_class: int = 10, epochs: int = 120, pairing: bool = True) -> ExperimentConfig:
    """Small, noisy synthetic training set where the baseline overfits."""
    cfg = ExperimentConfig(
        name=f"synthetic-gain-n{n_per_class}" + ("" if pairing else "-baseline"),
        dataset=DatasetConfig(source="synthetic", n_classes=10, synthetic_per_class=n_per_class,
                              synthetic_test_per_class=100, image_size=16, difficulty=1.0),
        pairing=PairingConfig(patch=(14, 14)),
        schedule=ScheduleConfig(warmup=20, on_span=8, off_span=2, finetune_start=epochs - 20),
        network="reduced",
        batch_size=50,
        epochs=epochs,
    )
    return cfg if pairing else replace(cfg, schedule=no_pairing_schedule(epochs))


CIFAR_PRESETS = {
    "subset_size": subset_size,
    "selection_method": selection_method,
    "label_policy": label_policy,
    "mix_weight": mix_weight,
    "on_off_ratio": on_off_ratio,
    "full_cifar10": full_cifar10,
}


def preset(name: str, cifar_dir: str | None = None) -> dict:
    if name in CIFAR_PRESETS:
        if cifar_dir is None:
            raise ValueError(f"preset {name} needs the CIFAR-10 directory")
        return CIFAR_PRESETS[name](cifar_dir)
    synthetic = {
        "synthetic_ceiling": lambda: {"ceiling": synthetic_ceiling()},
        "synthetic_smoke": lambda: {"smoke": synthetic_smoke()},
        "synthetic_gain": lambda: {"baseline": synthetic_gain(pairing=False), "pairing": synthetic_gain()},
    }
    if name not in synthetic:
        raise ValueError(f"unknown preset {name!r}; known: {sorted([*CIFAR_PRESETS, *synthetic])}")
    return synthetic[name]()


PRESET_NAMES = (*CIFAR_PRESETS, "synthetic_ceiling", "synthetic_smoke", "synthetic_gain")
