"""The training loop: schedule-driven pairing, Adam updates, evaluation and
metrics files."""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

import samplepairing
from samplepairing import imagecore
from samplepairing.data import (
    Dataset,
    NonTrainingPool,
    build_nontraining_pool,
    load_cifar10,
    make_synthetic,
    subset_per_class,
)
from samplepairing.harness.config import ExperimentConfig
from samplepairing.nn import Adam, Network, loss_xent_soft, predict, save_checkpoint, spec_by_name
from samplepairing.pairing import Pairer, Selection
from samplepairing.schedule import Phase, Unit, phase_at

log = logging.getLogger(__name__)

CSV_HEADER = ("epoch", "phase", "train_err", "train_loss", "val_err", "val_loss", "seconds")
MANIFEST_FORMAT = "samplepairing-run"


class ExperimentError(RuntimeError):
    pass


@dataclass
class EpochRecord:
    epoch: int
    phase: Phase
    train_err: float
    train_loss: float
    val_err: float
    val_loss: float
    seconds: float


@dataclass
class MetricsLog:
    records: list[EpochRecord] = field(default_factory=list)

    def append(self, rec: EpochRecord):
        for name in ("train_err", "val_err"):
            if not 0.0 <= getattr(rec, name) <= 1.0:
                raise ValueError(f"{name} outside [0, 1]")
        self.records.append(rec)

    def __len__(self):
        return len(self.records)

    def column(self, name: str) -> list:
        return [getattr(r, name) for r in self.records]


@dataclass
class PreparedData:
    train: Dataset
    val: Dataset
    pool: NonTrainingPool | None
    checksums: dict


@dataclass
class RunResult:
    log: MetricsLog
    net: Network
    optimizer: Adam
    data: PreparedData


# --------------------------------------------------------------------------
# Data


def _balanced_head(ds: Dataset, limit: int) -> Dataset:
    per_class = max(1, limit // ds.n_classes)
    keep = np.sort(np.concatenate([ds.class_index[k][:per_class] for k in range(ds.n_classes)]))
    return ds.take(keep)


def prepare_data(cfg: ExperimentConfig) -> PreparedData:
    d = cfg.dataset
    if d.source == "cifar10":
        if d.path is None:
            raise ExperimentError("cifar10 dataset needs dataset.path")
        full_train, val = load_cifar10(d.path)
    else:
        full_train, val = make_synthetic(
            n_classes=d.n_classes,
            n_per_class=d.synthetic_per_class,
            image_size=d.image_size,
            difficulty=d.difficulty,
            seed=d.synthetic_seed,
            n_test_per_class=d.synthetic_test_per_class,
        )
    train = full_train
    if d.n_per_class is not None:
        train = subset_per_class(full_train, d.n_per_class, seed=cfg.seeds.data)
    pool = None
    if cfg.pairing.selection.variant is Selection.NON_TRAINING_POOL:
        pool = build_nontraining_pool(full_train, train, d.pool_size, seed=cfg.seeds.data + 1)
    if d.val_limit is not None:
        val = _balanced_head(val, d.val_limit)
    checksums = {"train_source": full_train.checksum, "val_source": val.checksum,
                 "train_ids": _ids_digest(train.ids)}
    if pool is not None:
        checksums["pool_ids"] = _ids_digest(pool.ids)
    return PreparedData(train, val, pool, checksums)


def _ids_digest(ids: np.ndarray) -> str:
    return hashlib.sha256(np.asarray(ids, dtype=np.int64).tobytes()).hexdigest()


# --------------------------------------------------------------------------
# Sample stream


def epoch_order(cfg: ExperimentConfig, epoch: int, n: int) -> np.ndarray:
    return np.random.default_rng([cfg.seeds.data, epoch]).permutation(n)


def sample_rng(cfg: ExperimentConfig, epoch: int, slot: int) -> np.random.Generator:
    """Augmentation randomness for the ``slot``-th sample served in ``epoch``."""
    return np.random.default_rng([cfg.seeds.augment, epoch, slot])


def sample_phase(cfg: ExperimentConfig, epoch: int, slot: int, n: int) -> Phase:
    if cfg.schedule.unit is Unit.IMAGES:
        return phase_at(epoch * n + slot, cfg.schedule)
    return phase_at(epoch, cfg.schedule)


def epoch_batches(cfg: ExperimentConfig, pairer: Pairer, epoch: int, executor=None):
    """Yield ``(images, targets, labels)`` batches for one epoch.

    Every sample draws from its own generator keyed by (augment seed,
    epoch, slot), so the stream is the same whether or not an executor
    prepares samples in parallel.
    """
    n = len(pairer.dataset)
    order = epoch_order(cfg, epoch, n)

    def one(slot):
        phase = sample_phase(cfg, epoch, slot, n)
        return pairer.augment(int(order[slot]), phase.pairing_enabled, sample_rng(cfg, epoch, slot))

    for start in range(0, n, cfg.batch_size):
        slots = range(start, min(start + cfg.batch_size, n))
        samples = list(executor.map(one, slots)) if executor is not None else [one(s) for s in slots]
        yield (
            np.stack([s.image for s in samples]),
            np.stack([s.target for s in samples]),
            np.array([s.label for s in samples]),
        )


# --------------------------------------------------------------------------
# Evaluation


def center_patches(ds: Dataset, patch: tuple[int, int]) -> np.ndarray:
    top, left = imagecore.center_crop_offset(*ds.image_shape[:2], *patch)
    return ds.images[:, top : top + patch[0], left : left + patch[1]]


def evaluate(net: Network, dataset: Dataset, patch: tuple[int, int] | None = None,
             batch_size: int = 500) -> tuple[float, float]:
    """Top-1 error and mean cross-entropy on centre patches, no flipping.

    Equal logits resolve to the lowest class id.
    """
    if patch is None:
        patch = net.spec.input_shape[:2]
    if dataset.n_classes != net.n_classes:
        raise ValueError(f"dataset has {dataset.n_classes} classes, network {net.n_classes}")
    x = center_patches(dataset, tuple(patch))
    if x.shape[1:] != net.spec.input_shape:
        raise ValueError(f"patches {x.shape[1:]} do not match network input {net.spec.input_shape}")
    wrong, loss_sum = 0, 0.0
    eye = np.eye(net.n_classes)
    for start in range(0, len(x), batch_size):
        xb = x[start : start + batch_size]
        yb = dataset.labels[start : start + batch_size]
        logits = net.forward(xb, train=False)
        loss, _ = loss_xent_soft(logits.astype(np.float64), eye[yb])
        loss_sum += loss * len(xb)
        wrong += int((predict(logits) != yb).sum())
    return wrong / len(x), loss_sum / len(x)


# --------------------------------------------------------------------------
# Run


def build_network(cfg: ExperimentConfig, train: Dataset) -> Network:
    shape = (*cfg.pairing.patch, train.image_shape[2])
    spec = spec_by_name(cfg.network, train.n_classes, shape)
    return Network(spec, np.random.default_rng([cfg.seeds.init, 0]))


def run_experiment(cfg: ExperimentConfig, out_dir=None, data: PreparedData | None = None,
                   epoch_callback=None) -> RunResult:
    """Train per ``cfg``; write metrics, manifest and checkpoint to ``out_dir``."""
    data = data or prepare_data(cfg)
    pairer = Pairer(data.train, cfg.pairing, data.pool)
    net = build_network(cfg, data.train)
    opt = Adam(cfg.optimizer)
    metrics = MetricsLog()
    n = len(data.train)
    executor = ThreadPoolExecutor(cfg.workers) if cfg.workers > 0 else None
    try:
        for epoch in range(cfg.epochs):
            t0 = time.perf_counter()
            phase = sample_phase(cfg, epoch, 0, n)
            wrong, loss_sum = 0, 0.0
            batch_idx = -1
            try:
                for batch_idx, (x, t, labels) in enumerate(epoch_batches(cfg, pairer, epoch, executor)):
                    dropout_rng = np.random.default_rng([cfg.seeds.init, 1, epoch, batch_idx])
                    loss, logits = net.train_step(x, t, dropout_rng)
                    opt.step(net.named_params(), net.named_grads())
                    loss_sum += loss * len(x)
                    wrong += int((predict(logits) != labels).sum())
                val_err, val_loss = evaluate(net, data.val, cfg.pairing.patch)
            except Exception as exc:
                raise ExperimentError(f"{cfg.name}: epoch {epoch} batch {batch_idx + 1}: {exc}") from exc
            rec = EpochRecord(epoch, phase, wrong / n, loss_sum / n, val_err, val_loss,
                              time.perf_counter() - t0)
            metrics.append(rec)
            log.info("%s epoch %d %s train_err %.4f val_err %.4f", cfg.name, epoch,
                     phase.value, rec.train_err, rec.val_err)
            if epoch_callback is not None:
                epoch_callback(rec)
    finally:
        if executor is not None:
            executor.shutdown()
    net.clear_caches()
    result = RunResult(metrics, net, opt, data)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        emit_metrics(metrics, out / "metrics.csv")
        write_manifest(cfg, data, out / "manifest.json")
        save_checkpoint(out / "checkpoint.npz", net, opt, extra={"epochs": cfg.epochs, "name": cfg.name})
    return result


# --------------------------------------------------------------------------
# Output files


def emit_metrics(log_: MetricsLog, path) -> None:
    """CSV with header ``epoch,phase,train_err,train_loss,val_err,val_loss,seconds``.

    Floats are written with ``repr`` so reruns reproduce them byte for byte.
    """
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for r in log_.records:
            writer.writerow([r.epoch, r.phase.value, repr(float(r.train_err)), repr(float(r.train_loss)),
                             repr(float(r.val_err)), repr(float(r.val_loss)), f"{r.seconds:.3f}"])


def read_metrics(path) -> MetricsLog:
    out = MetricsLog()
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CSV_HEADER:
            raise ValueError(f"{path}: unexpected header {reader.fieldnames}")
        for row in reader:
            out.append(EpochRecord(int(row["epoch"]), Phase(row["phase"]), float(row["train_err"]),
                                   float(row["train_loss"]), float(row["val_err"]),
                                   float(row["val_loss"]), float(row["seconds"])))
    return out


def manifest(cfg: ExperimentConfig, data: PreparedData) -> dict:
    return {
        "format": MANIFEST_FORMAT,
        "version": 1,
        "code_version": samplepairing.__version__,
        "config": cfg.to_dict(),
        "seeds": {"data": cfg.seeds.data, "init": cfg.seeds.init, "augment": cfg.seeds.augment},
        "datasets": {
            "train": data.train.name,
            "val": data.val.name,
            "n_train": len(data.train),
            "n_val": len(data.val),
            "n_pool": 0 if data.pool is None else len(data.pool),
            "checksums": data.checksums,
        },
    }


def write_manifest(cfg: ExperimentConfig, data: PreparedData, path) -> None:
    Path(path).write_text(json.dumps(manifest(cfg, data), indent=2, sort_keys=True) + "\n")


def config_from_manifest(path) -> ExperimentConfig:
    return ExperimentConfig.from_dict(json.loads(Path(path).read_text())["config"])
