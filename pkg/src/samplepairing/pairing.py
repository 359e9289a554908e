"""Partner selection, mix weights, training targets and the augment-then-mix
pipeline for a single training sample."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from samplepairing import imagecore
from samplepairing.data import CIFAR10_SUPER_CLASSES, Dataset, NonTrainingPool


class PolicyError(ValueError):
    pass


class Selection(str, enum.Enum):
    ENTIRE = "entire"  # method A
    SAME_CLASS = "same_class"  # B
    DIFFERENT_CLASS = "different_class"  # C
    SAME_SUPER_CLASS = "same_super_class"  # D
    DIFFERENT_SUPER_CLASS = "different_super_class"  # E
    NON_TRAINING_POOL = "non_training_pool"


class WeightKind(str, enum.Enum):
    FIXED_HALF = "fixed_half"
    UNIFORM = "uniform"
    UNIFORM_CAPPED_HALF = "uniform_capped_half"
    BETA = "beta"


class LabelPolicy(str, enum.Enum):
    FIRST_ONLY = "first_only"
    BLENDED = "blended"


@dataclass(frozen=True)
class MixWeightDistribution:
    kind: WeightKind = WeightKind.FIXED_HALF
    alpha: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", WeightKind(self.kind))
        if self.kind is WeightKind.BETA:
            if self.alpha is None or not self.alpha > 0:
                raise PolicyError("beta mix weights need alpha > 0")
        elif self.alpha is not None:
            raise PolicyError(f"alpha is only meaningful for beta weights, not {self.kind.value}")

    def to_dict(self) -> dict:
        d = {"kind": self.kind.value}
        if self.alpha is not None:
            d["alpha"] = self.alpha
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "MixWeightDistribution":
        return cls(kind=d["kind"], alpha=d.get("alpha"))


@dataclass(frozen=True)
class SelectionPolicy:
    """How the partner image is chosen.

    ``super_classes`` lists the class groups used by the super-class
    variants; entries may be class names or class ids and are resolved
    against the dataset at bind time.
    """

    variant: Selection = Selection.ENTIRE
    super_classes: tuple[tuple, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "variant", Selection(self.variant))
        if self.super_classes is not None:
            object.__setattr__(
                self, "super_classes", tuple(tuple(g) for g in self.super_classes)
            )
        if self.variant in (Selection.SAME_SUPER_CLASS, Selection.DIFFERENT_SUPER_CLASS):
            if not self.super_classes:
                raise PolicyError(f"{self.variant.value} needs super_classes")

    def to_dict(self) -> dict:
        d = {"variant": self.variant.value}
        if self.super_classes is not None:
            d["super_classes"] = [list(g) for g in self.super_classes]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SelectionPolicy":
        return cls(variant=d["variant"], super_classes=d.get("super_classes"))


CIFAR10_SUPER_CLASS_POLICY = {
    "same": SelectionPolicy(Selection.SAME_SUPER_CLASS, CIFAR10_SUPER_CLASSES),
    "different": SelectionPolicy(Selection.DIFFERENT_SUPER_CLASS, CIFAR10_SUPER_CLASSES),
}


@dataclass(frozen=True)
class PairingConfig:
    selection: SelectionPolicy = field(default_factory=SelectionPolicy)
    weights: MixWeightDistribution = field(default_factory=MixWeightDistribution)
    labels: LabelPolicy = LabelPolicy.FIRST_ONLY
    patch: tuple[int, int] = (28, 28)
    flip_prob: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "labels", LabelPolicy(self.labels))
        object.__setattr__(self, "patch", tuple(int(p) for p in self.patch))
        if len(self.patch) != 2 or min(self.patch) < 1:
            raise PolicyError(f"bad patch size {self.patch}")
        if not 0.0 <= self.flip_prob <= 1.0:
            raise PolicyError("flip_prob must lie in [0, 1]")

    def to_dict(self) -> dict:
        return {
            "selection": self.selection.to_dict(),
            "weights": self.weights.to_dict(),
            "labels": self.labels.value,
            "patch": list(self.patch),
            "flip_prob": self.flip_prob,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PairingConfig":
        return cls(
            selection=SelectionPolicy.from_dict(d.get("selection", {"variant": "entire"})),
            weights=MixWeightDistribution.from_dict(d.get("weights", {"kind": "fixed_half"})),
            labels=d.get("labels", "first_only"),
            patch=tuple(d.get("patch", (28, 28))),
            flip_prob=d.get("flip_prob", 0.5),
        )


class PartnerRef(NamedTuple):
    """Position of the partner either in the training set or in the pool."""

    from_pool: bool
    index: int


# --------------------------------------------------------------------------
# Partner selection


def resolve_super_classes(groups, class_names: tuple[str, ...]) -> np.ndarray:
    """Turn name/id groups into a class id -> super-class id array.

    Every class must belong to exactly one group.
    """
    n = len(class_names)
    mapping = np.full(n, -1, dtype=np.int64)
    for g, members in enumerate(groups):
        for m in members:
            k = int(m) if isinstance(m, (int, np.integer)) else _class_by_name(m, class_names)
            if not 0 <= k < n:
                raise PolicyError(f"super class member {m!r} is not a class")
            if mapping[k] != -1:
                raise PolicyError(f"class {class_names[k]!r} appears in two super classes")
            mapping[k] = g
    missing = [class_names[k] for k in np.flatnonzero(mapping < 0)]
    if missing:
        raise PolicyError(f"super class map does not cover {missing}")
    return mapping


def _class_by_name(name, class_names):
    try:
        return class_names.index(name)
    except ValueError:
        raise PolicyError(f"unknown class name {name!r}") from None


class PartnerSelector:
    """Candidate tables for one policy bound to one training set.

    Candidates are precomputed per anchor class, so each draw is a single
    uniform integer.
    """

    def __init__(
        self,
        policy: SelectionPolicy,
        class_index: dict[int, np.ndarray],
        class_names: tuple[str, ...] | None = None,
        pool: NonTrainingPool | None = None,
    ):
        self.policy = policy
        self.pool_size = 0
        n_classes = len(class_index)
        if class_names is None:
            class_names = tuple(str(k) for k in range(n_classes))
        v = policy.variant
        if v is Selection.NON_TRAINING_POOL:
            if pool is None or len(pool) == 0:
                raise PolicyError("non-training-pool selection needs a non-empty pool")
            self.pool_size = len(pool)
            self._tables = None
            return
        everything = np.sort(np.concatenate([class_index[k] for k in range(n_classes)]))
        if v is Selection.ENTIRE:
            self._tables = {k: everything for k in range(n_classes)}
            return
        if v in (Selection.SAME_CLASS, Selection.DIFFERENT_CLASS):
            group = np.arange(n_classes)
        else:
            group = resolve_super_classes(policy.super_classes, class_names)
        same = v in (Selection.SAME_CLASS, Selection.SAME_SUPER_CLASS)
        tables = {}
        for k in range(n_classes):
            members = [class_index[j] for j in range(n_classes) if (group[j] == group[k]) == same]
            tables[k] = np.sort(np.concatenate(members)) if members else np.empty(0, np.int64)
        self._tables = tables

    def candidates(self, anchor_class: int) -> np.ndarray:
        if self._tables is None:
            return np.arange(self.pool_size)
        return self._tables[anchor_class]

    def select(self, anchor_index: int, anchor_class: int, rng: np.random.Generator) -> PartnerRef:
        if self._tables is None:
            return PartnerRef(True, int(rng.integers(self.pool_size)))
        cands = self._tables[anchor_class]
        if cands.size == 0:
            raise PolicyError(
                f"{self.policy.variant.value}: no candidate partner for class {anchor_class}"
            )
        return PartnerRef(False, int(cands[rng.integers(cands.size)]))


def select_partner(
    policy: SelectionPolicy,
    anchor_index: int,
    anchor_class: int,
    class_index: dict[int, np.ndarray],
    rng: np.random.Generator,
    class_names: tuple[str, ...] | None = None,
    pool: NonTrainingPool | None = None,
) -> PartnerRef:
    """One-shot partner draw; build a :class:`PartnerSelector` for loops."""
    selector = PartnerSelector(policy, class_index, class_names, pool)
    return selector.select(anchor_index, anchor_class, rng)


# --------------------------------------------------------------------------
# Weights and targets


def sample_beta(alpha: float, rng: np.random.Generator, beta: float | None = None) -> float:
    """Beta(alpha, beta) as g1 / (g1 + g2) with g_i ~ Gamma(., 1)."""
    beta = alpha if beta is None else beta
    while True:
        g1 = rng.standard_gamma(alpha)
        g2 = rng.standard_gamma(beta)
        s = g1 + g2
        if s > 0.0:
            return float(g1 / s)


def draw_mix_weight(dist: MixWeightDistribution, rng: np.random.Generator) -> float:
    """Weight of the anchor image in the mix."""
    kind = dist.kind
    if kind is WeightKind.FIXED_HALF:
        return 0.5
    if kind is WeightKind.UNIFORM:
        return float(rng.random())
    if kind is WeightKind.UNIFORM_CAPPED_HALF:
        # partner weight uniform on [0, 0.5]
        return 1.0 - 0.5 * float(rng.random())
    return sample_beta(dist.alpha, rng)


def make_target(label_a: int, label_b: int | None, policy: LabelPolicy, n_classes: int) -> np.ndarray:
    """Soft training target; ``label_b`` may be None for pool partners."""
    policy = LabelPolicy(policy)
    for lab in (label_a, label_b):
        if lab is not None and not 0 <= lab < n_classes:
            raise ValueError(f"label {lab} out of range for {n_classes} classes")
    target = np.zeros(n_classes)
    if policy is LabelPolicy.FIRST_ONLY or label_b is None:
        target[label_a] = 1.0
    else:
        target[label_a] += 0.5
        target[label_b] += 0.5
    return target


# --------------------------------------------------------------------------
# Sample pipeline


def baseline_augment(
    img: np.ndarray, patch: tuple[int, int], flip_prob: float, rng: np.random.Generator
) -> np.ndarray:
    """Random patch extraction followed by a random horizontal flip."""
    out = imagecore.random_crop(img, patch[0], patch[1], rng)
    if rng.random() < flip_prob:
        out = imagecore.horizontal_flip(out)
    return out


class AugmentedSample(NamedTuple):
    image: np.ndarray
    target: np.ndarray
    label: int
    partner: PartnerRef | None
    weight: float


class Pairer:
    """Serves augmented (image, target) pairs for one training set.

    The draw order per call is: partner, mix weight, anchor crop/flip,
    partner crop/flip. Targets consume no randomness, so the label policy
    never changes the image stream.
    """

    def __init__(self, dataset: Dataset, config: PairingConfig, pool: NonTrainingPool | None = None):
        if len(dataset) == 0:
            raise PolicyError("cannot pair samples from an empty dataset")
        h, w = dataset.image_shape[:2]
        if config.patch[0] > h or config.patch[1] > w:
            raise PolicyError(f"patch {config.patch} larger than images {h}x{w}")
        self.dataset = dataset
        self.config = config
        self.pool = pool
        self.selector = PartnerSelector(
            config.selection, dataset.class_index, dataset.class_names, pool
        )

    def augment(self, position: int, pairing_enabled: bool, rng: np.random.Generator) -> AugmentedSample:
        ds, cfg = self.dataset, self.config
        label = int(ds.labels[position])
        if not pairing_enabled:
            img = baseline_augment(ds.images[position], cfg.patch, cfg.flip_prob, rng)
            return AugmentedSample(img, make_target(label, None, cfg.labels, ds.n_classes), label, None, 1.0)
        ref = self.selector.select(position, label, rng)
        w = draw_mix_weight(cfg.weights, rng)
        a = baseline_augment(ds.images[position], cfg.patch, cfg.flip_prob, rng)
        if ref.from_pool:
            partner_img, partner_label = self.pool.images[ref.index], None
        else:
            partner_img, partner_label = ds.images[ref.index], int(ds.labels[ref.index])
        b = baseline_augment(partner_img, cfg.patch, cfg.flip_prob, rng)
        mixed = imagecore.mix_images(a, b, w)
        target = make_target(label, partner_label, cfg.labels, ds.n_classes)
        return AugmentedSample(mixed, target, label, ref, w)


def augment_sample(
    position: int,
    pairing_enabled: bool,
    config: PairingConfig,
    dataset: Dataset,
    rng: np.random.Generator,
    pool: NonTrainingPool | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    out = Pairer(dataset, config, pool).augment(position, pairing_enabled, rng)
    return out.image, out.target
