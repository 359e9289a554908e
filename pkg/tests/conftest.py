import os

import hypothesis
import numpy as np
import pytest

from samplepairing.data import make_synthetic, serialize_cifar10_records

hypothesis.settings.register_profile("default", deadline=None, max_examples=60)
hypothesis.settings.register_profile("fast", deadline=None, max_examples=10)
hypothesis.settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def synthetic10():
    return make_synthetic(n_classes=10, n_per_class=20, image_size=12, difficulty=0.5, seed=3)


def write_fake_cifar(root, per_batch=30, test_records=20, seed=0):
    """Standard-layout CIFAR-10 binaries filled with random pixels."""
    rng = np.random.default_rng(seed)
    root.mkdir(parents=True, exist_ok=True)
    files = {}
    for name, n in [*[(f"data_batch_{i}.bin", per_batch) for i in range(1, 6)], ("test_batch.bin", test_records)]:
        labels = np.arange(n) % 10
        pixels = rng.integers(0, 256, size=(n, 32, 32, 3), dtype=np.uint8)
        raw = serialize_cifar10_records(pixels / 255.0, labels)
        (root / name).write_bytes(raw)
        files[name] = raw
    return files


@pytest.fixture
def fake_cifar(tmp_path):
    root = tmp_path / "cifar-10-batches-bin"
    files = write_fake_cifar(root)
    return root, files


def cifar_dir():
    path = os.environ.get("SAMPLEPAIRING_CIFAR10_DIR")
    return path if path and os.path.isdir(path) else None
