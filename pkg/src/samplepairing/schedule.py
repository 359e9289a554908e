"""Warmup / intermittent / fine-tune phases for turning pairing on and off."""

from __future__ import annotations

import enum
from dataclasses import asdict, dataclass
from fractions import Fraction


class Phase(str, enum.Enum):
    WARMUP = "warmup"
    ON = "on"
    OFF = "off"
    FINETUNE = "finetune"

    @property
    def pairing_enabled(self) -> bool:
        return self is Phase.ON


class Unit(str, enum.Enum):
    EPOCHS = "epochs"
    IMAGES = "images"


@dataclass(frozen=True)
class ScheduleConfig:
    """Counter thresholds, all in ``unit``.

    Pairing is off for ``t < warmup``, alternates ``on_span`` on /
    ``off_span`` off until ``finetune_start``, and is off for good after.
    """

    warmup: int = 100
    on_span: int = 8
    off_span: int = 2
    finetune_start: int = 260
    unit: Unit = Unit.EPOCHS

    def __post_init__(self):
        object.__setattr__(self, "unit", Unit(self.unit))
        if self.warmup < 0 or self.on_span < 0 or self.off_span < 0:
            raise ValueError("schedule spans must be non-negative")
        if self.on_span + self.off_span < 1:
            raise ValueError("on_span + off_span must be at least 1")
        if self.finetune_start < self.warmup:
            raise ValueError("finetune_start must not precede the end of warmup")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["unit"] = self.unit.value
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ScheduleConfig":
        return cls(**d)


def phase_at(t: int, cfg: ScheduleConfig) -> Phase:
    if t < 0:
        raise ValueError("schedule counter must be non-negative")
    if t < cfg.warmup:
        return Phase.WARMUP
    if t >= cfg.finetune_start:
        return Phase.FINETUNE
    p = (t - cfg.warmup) % (cfg.on_span + cfg.off_span)
    return Phase.ON if p < cfg.on_span else Phase.OFF


def phase_sequence(cfg: ScheduleConfig, length: int) -> list[Phase]:
    return [phase_at(t, cfg) for t in range(length)]


def enabled_fraction(cfg: ScheduleConfig) -> Fraction:
    """Share of each on/off cycle with pairing enabled (exact)."""
    return Fraction(cfg.on_span, cfg.on_span + cfg.off_span)


def theoretical_max_training_accuracy(n_classes: int) -> float:
    """Best achievable accuracy on equal-weight mixes labelled by the anchor.

    Assumes balanced classes: the partner shares the anchor's class with
    probability 1/n, otherwise the mix is a coin flip between two labels.
    """
    if n_classes < 2:
        raise ValueError("need at least two classes")
    return 0.5 + 1.0 / (2 * n_classes)
