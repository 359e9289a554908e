"""Datasets: CIFAR-10 binary batches, class-balanced subsets, held-out pools
and a synthetic class-conditional image generator for fast experiments."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from samplepairing.imagecore import from_uint8, to_uint8

CIFAR10_CLASSES = (
    "airplane",
    "automobile",
    "bird",
    "cat",
    "deer",
    "dog",
    "frog",
    "horse",
    "ship",
    "truck",
)
CIFAR10_TRAIN_FILES = tuple(f"data_batch_{i}.bin" for i in range(1, 6))
CIFAR10_TEST_FILES = ("test_batch.bin",)
CIFAR10_RECORD_BYTES = 1 + 3 * 32 * 32

# artificial objects vs living things
CIFAR10_SUPER_CLASSES = (
    ("airplane", "automobile", "ship", "truck"),
    ("bird", "cat", "deer", "dog", "frog", "horse"),
)


class DataFormatError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Dataset:
    """Labelled images with stable sample ids.

    ``ids`` identify samples within the source corpus, so subsets and pools
    drawn from the same corpus can be checked for overlap.
    """

    images: np.ndarray  # (N, H, W, C)
    labels: np.ndarray  # (N,) int
    n_classes: int
    class_names: tuple[str, ...]
    ids: np.ndarray = None
    name: str = "dataset"
    checksum: str = ""
    _class_index: dict = field(default=None, repr=False)

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.int64)
        object.__setattr__(self, "labels", labels)
        if self.ids is None:
            object.__setattr__(self, "ids", np.arange(len(labels), dtype=np.int64))
        if len(self.images) != len(labels) or len(self.ids) != len(labels):
            raise ValueError("images, labels and ids must have equal length")
        if len(labels) and (labels.min() < 0 or labels.max() >= self.n_classes):
            raise ValueError("label out of range")
        if len(self.class_names) != self.n_classes:
            raise ValueError("class_names must name every class")
        index = {k: np.flatnonzero(labels == k) for k in range(self.n_classes)}
        object.__setattr__(self, "_class_index", index)

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def class_index(self) -> dict[int, np.ndarray]:
        """Map class id -> positions (into this dataset) of its samples."""
        return self._class_index

    @property
    def image_shape(self) -> tuple[int, int, int]:
        return tuple(self.images.shape[1:])

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.n_classes)

    def take(self, positions, name: str | None = None) -> "Dataset":
        positions = np.asarray(positions, dtype=np.int64)
        return Dataset(
            images=self.images[positions],
            labels=self.labels[positions],
            n_classes=self.n_classes,
            class_names=self.class_names,
            ids=self.ids[positions],
            name=name or self.name,
            checksum=self.checksum,
        )

    def class_id(self, name_or_id) -> int:
        if isinstance(name_or_id, (int, np.integer)):
            if not 0 <= name_or_id < self.n_classes:
                raise ValueError(f"class id {name_or_id} out of range")
            return int(name_or_id)
        try:
            return self.class_names.index(name_or_id)
        except ValueError:
            raise ValueError(f"unknown class name {name_or_id!r}") from None


@dataclass(frozen=True, eq=False)
class NonTrainingPool:
    """Unlabelled partner images held out from the training subset."""

    images: np.ndarray
    ids: np.ndarray

    def __len__(self) -> int:
        return len(self.ids)


# --------------------------------------------------------------------------
# CIFAR-10 binary format


def parse_cifar10_records(raw: bytes, source: str = "<bytes>", dtype=np.float32):
    """Parse concatenated 3073-byte records into (images HWC in [0,1], labels)."""
    if len(raw) % CIFAR10_RECORD_BYTES:
        n_full = len(raw) // CIFAR10_RECORD_BYTES
        raise DataFormatError(
            f"{source}: truncated record {n_full} "
            f"({len(raw) - n_full * CIFAR10_RECORD_BYTES} of {CIFAR10_RECORD_BYTES} bytes)"
        )
    records = np.frombuffer(raw, dtype=np.uint8).reshape(-1, CIFAR10_RECORD_BYTES)
    labels = records[:, 0].astype(np.int64)
    bad = np.flatnonzero(labels > 9)
    if bad.size:
        raise DataFormatError(
            f"{source}: record {bad[0]} has label byte {labels[bad[0]]} (> 9)"
        )
    planes = records[:, 1:].reshape(-1, 3, 32, 32).transpose(0, 2, 3, 1)
    return from_uint8(planes, dtype=dtype), labels


def serialize_cifar10_records(images: np.ndarray, labels: np.ndarray) -> bytes:
    """Inverse of :func:`parse_cifar10_records`."""
    pixels = to_uint8(images).transpose(0, 3, 1, 2).reshape(len(labels), -1)
    out = np.empty((len(labels), CIFAR10_RECORD_BYTES), dtype=np.uint8)
    out[:, 0] = np.asarray(labels, dtype=np.uint8)
    out[:, 1:] = pixels
    return out.tobytes()


def _read_split(root: Path, files, name, dtype) -> Dataset:
    digest = hashlib.sha256()
    images, labels = [], []
    for fname in files:
        path = root / fname
        if not path.is_file():
            raise DataFormatError(f"missing CIFAR-10 file {path}")
        raw = path.read_bytes()
        digest.update(raw)
        img, lab = parse_cifar10_records(raw, source=str(path), dtype=dtype)
        images.append(img)
        labels.append(lab)
    return Dataset(
        images=np.concatenate(images),
        labels=np.concatenate(labels),
        n_classes=10,
        class_names=CIFAR10_CLASSES,
        name=name,
        checksum=digest.hexdigest(),
    )


def load_cifar10(path, dtype=np.float32) -> tuple[Dataset, Dataset]:
    """Load the CIFAR-10 binary distribution (``cifar-10-batches-bin``).

    Train batches are read in their documented order 1..5, so sample ids are
    stable across machines.
    """
    root = Path(path)
    train = _read_split(root, CIFAR10_TRAIN_FILES, "cifar10-train", dtype)
    test = _read_split(root, CIFAR10_TEST_FILES, "cifar10-test", dtype)
    return train, test


def file_checksums(path, names) -> dict[str, str]:
    root = Path(path)
    return {n: hashlib.sha256((root / n).read_bytes()).hexdigest() for n in names}


# --------------------------------------------------------------------------
# Subsets and pools


def subset_per_class(ds: Dataset, n_per_class: int, seed: int) -> Dataset:
    """Draw ``n_per_class`` samples of every class without replacement."""
    counts = ds.class_counts()
    if n_per_class < 1 or n_per_class > counts.min():
        raise ValueError(
            f"n_per_class={n_per_class} outside [1, {counts.min()}] (smallest class)"
        )
    rng = np.random.default_rng(seed)
    chosen = []
    for k in range(ds.n_classes):
        members = ds.class_index[k]
        chosen.append(np.sort(rng.choice(members, size=n_per_class, replace=False)))
    positions = np.sort(np.concatenate(chosen))
    return ds.take(positions, name=f"{ds.name}@{n_per_class}")


def build_nontraining_pool(
    ds: Dataset, training_subset: Dataset, pool_size: int, seed: int
) -> NonTrainingPool:
    """Sample ``pool_size`` images of ``ds`` whose ids are not in the subset."""
    if pool_size < 1:
        raise ValueError("pool_size must be positive")
    held_out = np.flatnonzero(~np.isin(ds.ids, training_subset.ids))
    if pool_size > held_out.size:
        raise ValueError(
            f"pool_size={pool_size} exceeds {held_out.size} held-out samples"
        )
    rng = np.random.default_rng(seed)
    positions = np.sort(rng.choice(held_out, size=pool_size, replace=False))
    return NonTrainingPool(images=ds.images[positions], ids=ds.ids[positions].copy())


# --------------------------------------------------------------------------
# Synthetic data


def make_synthetic(
    n_classes: int = 10,
    n_per_class: int = 50,
    image_size: int = 16,
    difficulty: float = 0.3,
    seed: int = 0,
    n_test_per_class: int | None = None,
    channels: int = 3,
    dtype=np.float32,
) -> tuple[Dataset, Dataset]:
    """Class-conditional Gaussian blobs on a dark background.

    Every class owns a blob centre and a colour. ``difficulty`` scales the
    per-sample jitter of the blob position, its width and additive pixel
    noise; at 0 all samples of a class are identical.
    """
    if n_classes < 1 or n_per_class < 1 or image_size < 1:
        raise ValueError("synthetic dataset parameters must be positive")
    if n_test_per_class is None:
        n_test_per_class = n_per_class
    rng = np.random.default_rng(seed)
    margin = image_size * 0.2
    centres = rng.uniform(margin, image_size - 1 - margin, size=(n_classes, 2))
    colours = rng.uniform(0.3, 1.0, size=(n_classes, channels))
    width = image_size / 6.0
    yy, xx = np.mgrid[0:image_size, 0:image_size].astype(np.float64)

    def render(n_each, split_rng):
        labels = np.repeat(np.arange(n_classes), n_each)
        n = labels.size
        centre = centres[labels] + difficulty * split_rng.normal(0, width, size=(n, 2))
        sigma = width * np.exp(difficulty * 0.3 * split_rng.normal(size=n))
        d2 = (yy[None] - centre[:, 0, None, None]) ** 2 + (xx[None] - centre[:, 1, None, None]) ** 2
        blob = np.exp(-d2 / (2 * sigma[:, None, None] ** 2))
        img = 0.1 + 0.8 * blob[..., None] * colours[labels][:, None, None, :]
        img = img + difficulty * 0.15 * split_rng.normal(size=img.shape)
        return np.clip(img, 0.0, 1.0).astype(dtype), labels

    # independent streams so the train split does not depend on the test size
    train_rng, test_rng = (np.random.default_rng(s) for s in rng.bit_generator.seed_seq.spawn(2))
    names = tuple(f"class{k}" for k in range(n_classes))
    tr_img, tr_lab = render(n_per_class, train_rng)
    te_img, te_lab = render(n_test_per_class, test_rng)
    tag = f"synthetic(k={n_classes},n={n_per_class},s={image_size},d={difficulty},seed={seed})"
    train = Dataset(tr_img, tr_lab, n_classes, names, name=tag + "-train",
                    checksum=hashlib.sha256(tr_img.tobytes() + tr_lab.tobytes()).hexdigest())
    test = Dataset(te_img, te_lab, n_classes, names, name=tag + "-test",
                   checksum=hashlib.sha256(te_img.tobytes() + te_lab.tobytes()).hexdigest())
    return train, test
