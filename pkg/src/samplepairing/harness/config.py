"""Experiment configuration and its JSON file format.

A config file is a JSON object::

    {
      "format": "samplepairing-experiment", "version": 1,
      "name": "...",
      "dataset": {"source": "synthetic" | "cifar10", ...},
      "pairing": {"selection": {...}, "weights": {...}, "labels": ..., "patch": [h, w], "flip_prob": p},
      "schedule": {"warmup", "on_span", "off_span", "finetune_start", "unit"},
      "network": "reduced" | "full",
      "optimizer": {"lr", "beta1", "beta2", "eps"},
      "batch_size": 100, "epochs": 300,
      "seeds": {"data", "init", "augment"},
      "workers": 0
    }

Missing keys take the dataclass defaults below.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

from samplepairing.nn.optim import AdamConfig
from samplepairing.pairing import PairingConfig, Selection
from samplepairing.schedule import ScheduleConfig

FORMAT = "samplepairing-experiment"
VERSION = 1


@dataclass(frozen=True)
class DatasetConfig:
    """Where training and validation images come from.

    ``n_per_class`` subsamples the training split (``None`` keeps all of it);
    ``pool_size`` sizes the held-out partner pool; ``val_limit`` evaluates
    on a fixed class-balanced slice of the validation split.
    """

    source: str = "synthetic"
    path: str | None = None
    n_per_class: int | None = None
    pool_size: int | None = None
    val_limit: int | None = None
    # synthetic generator
    n_classes: int = 10
    synthetic_per_class: int = 50
    synthetic_test_per_class: int = 50
    image_size: int = 16
    difficulty: float = 0.3
    synthetic_seed: int = 0

    def __post_init__(self):
        if self.source not in ("synthetic", "cifar10"):
            raise ValueError(f"unknown dataset source {self.source!r}")
        if self.n_per_class is not None and self.n_per_class < 1:
            raise ValueError("n_per_class must be positive")
        if self.pool_size is not None and self.pool_size < 1:
            raise ValueError("pool_size must be positive")


@dataclass(frozen=True)
class Seeds:
    data: int = 0  # subset, pool and per-epoch order
    init: int = 0  # weights and dropout masks
    augment: int = 0  # crops, flips, partners, mix weights


@dataclass(frozen=True)
class ExperimentConfig:
    name: str = "experiment"
    dataset: DatasetConfig = field(default_factory=DatasetConfig)
    pairing: PairingConfig = field(default_factory=PairingConfig)
    schedule: ScheduleConfig = field(default_factory=ScheduleConfig)
    network: str = "reduced"
    optimizer: AdamConfig = field(default_factory=AdamConfig)
    batch_size: int = 100
    epochs: int = 300
    seeds: Seeds = field(default_factory=Seeds)
    workers: int = 0

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError("batch_size must be at least 1")
        if self.epochs < 0:
            raise ValueError("epochs must be non-negative")
        if self.network not in ("reduced", "full"):
            raise ValueError(f"unknown network {self.network!r}")
        if self.workers < 0:
            raise ValueError("workers must be non-negative")
        uses_pool = self.pairing.selection.variant is Selection.NON_TRAINING_POOL
        if uses_pool and self.dataset.pool_size is None:
            raise ValueError("non-training-pool selection needs dataset.pool_size")

    def with_seeds(self, data=None, init=None, augment=None) -> "ExperimentConfig":
        s = self.seeds
        return replace(self, seeds=Seeds(
            s.data if data is None else data,
            s.init if init is None else init,
            s.augment if augment is None else augment,
        ))

    def to_dict(self) -> dict:
        return {
            "format": FORMAT,
            "version": VERSION,
            "name": self.name,
            "dataset": asdict(self.dataset),
            "pairing": self.pairing.to_dict(),
            "schedule": self.schedule.to_dict(),
            "network": self.network,
            "optimizer": self.optimizer.to_dict(),
            "batch_size": self.batch_size,
            "epochs": self.epochs,
            "seeds": asdict(self.seeds),
            "workers": self.workers,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        if d.get("format", FORMAT) != FORMAT:
            raise ValueError(f"not an experiment config: format {d.get('format')!r}")
        if d.get("version", VERSION) != VERSION:
            raise ValueError(f"unsupported config version {d.get('version')}")
        defaults = cls()
        return cls(
            name=d.get("name", defaults.name),
            dataset=DatasetConfig(**d.get("dataset", {})),
            pairing=PairingConfig.from_dict(d.get("pairing", {})),
            schedule=ScheduleConfig.from_dict(d["schedule"]) if "schedule" in d else defaults.schedule,
            network=d.get("network", defaults.network),
            optimizer=AdamConfig(**d.get("optimizer", {})),
            batch_size=d.get("batch_size", defaults.batch_size),
            epochs=d.get("epochs", defaults.epochs),
            seeds=Seeds(**d.get("seeds", {})),
            workers=d.get("workers", defaults.workers),
        )


def load_config(path) -> ExperimentConfig:
    return ExperimentConfig.from_dict(json.loads(Path(path).read_text()))


def save_config(cfg: ExperimentConfig, path) -> None:
    Path(path).write_text(json.dumps(cfg.to_dict(), indent=2) + "\n")
