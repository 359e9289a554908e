import re
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from samplepairing.schedule import (
    Phase,
    ScheduleConfig,
    Unit,
    enabled_fraction,
    phase_at,
    phase_sequence,
    theoretical_max_training_accuracy,
)


def test_epoch_schedule_example():
    cfg = ScheduleConfig(warmup=100, on_span=8, off_span=2, finetune_start=260)
    assert phase_at(99, cfg) is Phase.WARMUP
    assert all(phase_at(t, cfg) is Phase.ON for t in range(100, 108))
    assert all(phase_at(t, cfg) is Phase.OFF for t in (108, 109))
    assert phase_at(110, cfg) is Phase.ON
    assert phase_at(260, cfg) is Phase.FINETUNE


def test_image_count_schedule_example():
    n = 1_281_167  # one pass over the warmup set
    cfg = ScheduleConfig(warmup=n, on_span=300_000, off_span=100_000, finetune_start=10 * n,
                         unit=Unit.IMAGES)
    assert phase_at(n - 1, cfg) is Phase.WARMUP
    for offset, phase in [(0, Phase.ON), (299_999, Phase.ON), (300_000, Phase.OFF),
                          (399_999, Phase.OFF), (400_000, Phase.ON)]:
        assert phase_at(n + offset, cfg) is phase


def test_no_off_span_means_always_on():
    cfg = ScheduleConfig(warmup=3, on_span=10, off_span=0, finetune_start=50)
    assert {phase_at(t, cfg) for t in range(3, 50)} == {Phase.ON}


def test_enabled_fraction():
    assert enabled_fraction(ScheduleConfig(on_span=8, off_span=2)) == Fraction(4, 5)
    assert enabled_fraction(ScheduleConfig(on_span=10, off_span=0)) == 1
    assert enabled_fraction(ScheduleConfig(on_span=5, off_span=5)) == Fraction(1, 2)


def test_ceiling_values():
    assert theoretical_max_training_accuracy(10) == pytest.approx(0.55)
    assert theoretical_max_training_accuracy(2) == 0.75
    assert theoretical_max_training_accuracy(100) == pytest.approx(0.505)
    with pytest.raises(ValueError):
        theoretical_max_training_accuracy(1)


def test_ceiling_matches_enumeration():
    # exhaustive oracle: balanced classes, a predictor that names one of the two mixed labels
    for n in (2, 3, 10):
        hits = sum(1.0 if a == b else 0.5 for a in range(n) for b in range(n))
        assert theoretical_max_training_accuracy(n) == pytest.approx(hits / n**2)


@pytest.mark.parametrize("kwargs", [
    dict(on_span=0, off_span=0),
    dict(on_span=-1),
    dict(warmup=10, finetune_start=5),
    dict(unit="batches"),
])
def test_invalid_configs_are_rejected(kwargs):
    with pytest.raises(ValueError):
        ScheduleConfig(**kwargs)


def test_negative_counter_is_rejected():
    with pytest.raises(ValueError):
        phase_at(-1, ScheduleConfig())


configs = st.tuples(st.integers(0, 30), st.integers(0, 12), st.integers(0, 12), st.integers(0, 80)).filter(
    lambda t: t[1] + t[2] >= 1
).map(lambda t: ScheduleConfig(t[0], t[1], t[2], t[0] + t[3]))

LETTER = {Phase.WARMUP: "w", Phase.ON: "n", Phase.OFF: "f", Phase.FINETUNE: "t"}


@given(configs)
def test_sequence_has_the_closed_form_shape(cfg):
    cycle = cfg.on_span + cfg.off_span
    length = cfg.finetune_start + 3 * cycle
    seq = "".join(LETTER[p] for p in phase_sequence(cfg, length))
    body = ("n" * cfg.on_span + "f" * cfg.off_span) * (cfg.finetune_start // cycle + 1)
    expected = "w" * cfg.warmup + body[: cfg.finetune_start - cfg.warmup] + "t" * 3 * cycle
    assert seq == expected
    assert re.fullmatch(r"w*(?:n*f*)*t+", seq)


@given(configs, st.integers(0, 500))
def test_finetune_is_absorbing(cfg, t):
    if phase_at(t, cfg) is Phase.FINETUNE:
        assert all(phase_at(u, cfg) is Phase.FINETUNE for u in range(t, t + 50))


@given(configs)
def test_enabled_fraction_equals_on_rate_over_whole_cycles(cfg):
    cycle = cfg.on_span + cfg.off_span
    big = ScheduleConfig(cfg.warmup, cfg.on_span, cfg.off_span, cfg.warmup + 7 * cycle)
    window = [phase_at(t, big) for t in range(big.warmup, big.finetune_start)]
    assert Fraction(sum(p.pairing_enabled for p in window), len(window)) == enabled_fraction(cfg)


def test_only_on_phase_enables_pairing():
    assert [p.pairing_enabled for p in Phase] == [False, True, False, False]


def test_round_trip():
    cfg = ScheduleConfig(5, 3, 1, 40, "images")
    assert ScheduleConfig.from_dict(cfg.to_dict()) == cfg
