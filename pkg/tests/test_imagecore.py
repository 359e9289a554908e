import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from samplepairing.imagecore import (
    ShapeError,
    as_image,
    center_crop,
    center_crop_offset,
    crop,
    from_uint8,
    horizontal_flip,
    mix_images,
    random_crop,
    random_crop_offset,
    to_uint8,
)

unit = st.floats(0.0, 1.0, allow_nan=False)
shapes = st.tuples(st.integers(1, 6), st.integers(1, 6), st.sampled_from([1, 3]))


@st.composite
def image_pairs(draw, dtype=np.float64):
    shape = draw(shapes)
    a = draw(arrays(dtype, shape, elements=unit))
    b = draw(arrays(dtype, shape, elements=unit))
    return a, b


def test_mix_examples():
    a = np.full((2, 2, 3), 0.4)
    b = np.full((2, 2, 3), 0.8)
    np.testing.assert_allclose(mix_images(a, b, 0.5), 0.6, rtol=0, atol=1e-15)
    np.testing.assert_array_equal(mix_images(a, b, 0.0), b)
    np.testing.assert_array_equal(mix_images(a, b, 1.0), a)


@given(image_pairs(), unit)
def test_mix_self_is_identity(pair, w):
    a, _ = pair
    np.testing.assert_array_equal(mix_images(a, a, w), a)


@given(image_pairs(np.float32), unit)
def test_mix_self_is_identity_float32(pair, w):
    a, _ = pair
    out = mix_images(a, a, w)
    assert out.dtype == np.float32
    np.testing.assert_array_equal(out, a)


@given(image_pairs())
def test_equal_weight_mix_commutes_exactly(pair):
    a, b = pair
    np.testing.assert_array_equal(mix_images(a, b, 0.5), mix_images(b, a, 0.5))


@given(image_pairs(), unit)
def test_mix_is_linear_and_convex(pair, w):
    a, b = pair
    ab, ba = mix_images(a, b, w), mix_images(b, a, w)
    np.testing.assert_allclose(ab + ba, a + b, rtol=0, atol=1e-12)
    np.testing.assert_allclose(ab, w * a + (1 - w) * b, rtol=0, atol=1e-15)
    assert ab.min() >= 0.0 and ab.max() <= 1.0
    assert np.all(ab >= np.minimum(a, b)) and np.all(ab <= np.maximum(a, b))


def test_mix_rejects_bad_input():
    with pytest.raises(ShapeError):
        mix_images(np.zeros((2, 2, 3)), np.zeros((2, 3, 3)), 0.5)
    with pytest.raises(ValueError):
        mix_images(np.zeros((2, 2, 3)), np.zeros((2, 2, 3)), 1.5)


def test_mix_does_not_touch_inputs():
    a, b = np.full((3, 3, 1), 0.2), np.full((3, 3, 1), 0.6)
    a0, b0 = a.copy(), b.copy()
    mix_images(a, b, 0.3)
    np.testing.assert_array_equal(a, a0)
    np.testing.assert_array_equal(b, b0)


def test_as_image_and_uint8_conversion():
    img = as_image(np.arange(12), 2, 2, 3)
    assert img.shape == (2, 2, 3) and img[1, 0, 2] == 8
    with pytest.raises(ShapeError):
        as_image(np.arange(11), 2, 2, 3)
    raw = np.arange(256, dtype=np.uint8)
    f = from_uint8(raw)
    assert f.min() == 0.0 and f.max() == 1.0
    np.testing.assert_array_equal(to_uint8(f), raw)


def test_random_crop_offsets_are_uniform():
    rng = np.random.default_rng(0)
    counts = np.zeros((5, 5))
    n = 10_000
    for _ in range(n):
        top, left = random_crop_offset(32, 32, 28, 28, rng)
        counts[top, left] += 1
    freq = counts / n
    # uniform oracle over the 25 legal offsets
    assert np.all(np.abs(freq - 1 / 25) <= 0.01)
    chi2 = ((counts - n / 25) ** 2 / (n / 25)).sum()
    assert chi2 < 24 + 3 * np.sqrt(48)


def test_random_crop_matches_window_and_is_reproducible():
    img = np.random.default_rng(1).random((32, 32, 3))
    a = random_crop(img, 28, 28, np.random.default_rng(7))
    b = random_crop(img, 28, 28, np.random.default_rng(7))
    np.testing.assert_array_equal(a, b)
    top, left = random_crop_offset(32, 32, 28, 28, np.random.default_rng(7))
    np.testing.assert_array_equal(a, img[top : top + 28, left : left + 28])
    assert a.shape == (28, 28, 3)


def test_full_size_crop_is_identity():
    img = np.random.default_rng(2).random((8, 9, 3))
    np.testing.assert_array_equal(random_crop(img, 8, 9, np.random.default_rng(0)), img)
    np.testing.assert_array_equal(center_crop(img, 8, 9), img)


def test_crop_rejects_oversize():
    img = np.zeros((8, 8, 1))
    with pytest.raises(ShapeError):
        random_crop(img, 9, 8, np.random.default_rng(0))
    with pytest.raises(ShapeError):
        center_crop(img, 8, 9)
    with pytest.raises(ShapeError):
        crop(img, 1, 0, 8, 8)


def test_center_crop_offsets():
    assert center_crop_offset(32, 32, 28, 28) == (2, 2)
    assert center_crop_offset(33, 33, 28, 28) == (2, 2)
    img = np.random.default_rng(3).random((33, 33, 3))
    np.testing.assert_array_equal(center_crop(img, 28, 28), img[2:30, 2:30])


def test_horizontal_flip_examples():
    img = np.array([[1.0, 2.0], [3.0, 4.0]])[..., None]
    np.testing.assert_array_equal(horizontal_flip(img)[..., 0], [[2.0, 1.0], [4.0, 3.0]])
    narrow = np.random.default_rng(0).random((5, 1, 3))
    np.testing.assert_array_equal(horizontal_flip(narrow), narrow)


@given(image_pairs())
def test_flip_is_an_involution_and_preserves_range(pair):
    a, _ = pair
    np.testing.assert_array_equal(horizontal_flip(horizontal_flip(a)), a)
    f = horizontal_flip(a)
    assert f.shape == a.shape and f.min() >= 0.0 and f.max() <= 1.0
