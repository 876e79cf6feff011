import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from resolve_seg.imaging import (
    DimensionTooSmallError,
    ImagingError,
    TooManyLevelsError,
    build_pyramid,
    burt_kernel,
    level_shapes,
    reduce,
    upsample_mask,
)


def mirror(i, n):
    # reflect about the edge sample without repeating it; period 2(n-1)
    i = abs(i) % (2 * (n - 1))
    return 2 * (n - 1) - i if i >= n else i


def reduce_oracle(img, a=0.4):
    """Direct 5x5 outer-product convolution evaluated only at even samples."""
    w = [0.25 - a / 2, 0.25, a, 0.25, 0.25 - a / 2]
    h, wd = img.shape
    out = np.zeros(((h + 1) // 2, (wd + 1) // 2))
    for oy in range(out.shape[0]):
        for ox in range(out.shape[1]):
            acc = 0.0
            for m in range(-2, 3):
                for n in range(-2, 3):
                    acc += w[m + 2] * w[n + 2] * img[mirror(2 * oy + m, h), mirror(2 * ox + n, wd)]
            out[oy, ox] = acc
    return out


def test_kernel_sums_to_one_exactly():
    assert burt_kernel(0.4).sum() == 1.0
    np.testing.assert_allclose(burt_kernel(0.4), [0.05, 0.25, 0.4, 0.25, 0.05])


@pytest.mark.parametrize("shape", [(16, 16), (15, 16), (16, 13), (7, 5), (2, 2)])
def test_reduce_matches_direct_convolution(shape, rng):
    img = rng.uniform(0, 255, shape)
    np.testing.assert_allclose(reduce(img), reduce_oracle(img), atol=1e-9)


def test_constant_image_is_fixed_point():
    img = np.full((33, 20), 117.25)
    pyr = build_pyramid(img, 4)
    for lv in pyr.levels:
        np.testing.assert_allclose(lv, 117.25, atol=1e-9)


def test_level_shapes_ceil_halving():
    assert level_shapes((256, 256), 6)[-1] == (8, 8)
    assert level_shapes((15, 9), 4) == [(15, 9), (8, 5), (4, 3), (2, 2)]


def test_pyramid_shapes_and_readonly(rng):
    pyr = build_pyramid(rng.uniform(0, 255, (40, 30)), 3)
    assert [lv.shape for lv in pyr.levels] == level_shapes((40, 30), 3)
    assert pyr.r == len(pyr) == 3 and pyr.shape == (40, 30)
    with pytest.raises(ValueError):
        pyr[1][0, 0] = 1.0


def test_r_one_is_original(rng):
    img = rng.uniform(0, 255, (9, 9))
    np.testing.assert_array_equal(build_pyramid(img, 1)[0], img)


@pytest.mark.parametrize("r", [0, 9])
def test_r_out_of_range(r):
    with pytest.raises(TooManyLevelsError):
        build_pyramid(np.zeros((512, 512)), r)


def test_levels_must_stay_at_least_2x2():
    with pytest.raises(TooManyLevelsError):
        build_pyramid(np.zeros((8, 8)), 4)
    assert build_pyramid(np.zeros((8, 8)), 3)[2].shape == (2, 2)


def test_reduce_rejects_tiny_and_bad_input():
    with pytest.raises(DimensionTooSmallError):
        reduce(np.zeros((1, 5)))
    with pytest.raises(ImagingError):
        reduce(np.full((4, 4), 300.0))
    with pytest.raises(ImagingError):
        reduce(np.full((4, 4), np.nan))


def test_upsample_replicates_and_crops():
    m = np.array([[1, 0], [0, 1]], dtype=bool)
    up = upsample_mask(m, 2)
    assert up.shape == (4, 4)
    np.testing.assert_array_equal(up[:2, :2], True)
    np.testing.assert_array_equal(up[:2, 2:], False)
    assert upsample_mask(m, 4, (7, 5)).shape == (7, 5)
    with pytest.raises(ImagingError):
        upsample_mask(m, 3)


@settings(max_examples=40, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(2, 20), st.integers(2, 20)),
              elements=st.floats(0, 255, allow_nan=False)))
def test_reduce_stays_within_input_range(img):
    out = reduce(img)
    assert out.shape == ((img.shape[0] + 1) // 2, (img.shape[1] + 1) // 2)
    assert out.min() >= img.min() - 1e-9 and out.max() <= img.max() + 1e-9


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 40), st.integers(1, 40), st.sampled_from([1, 2, 4, 8]))
def test_upsample_then_subsample_roundtrip(h, w, factor):
    m = np.random.default_rng(h * 41 + w).random((h, w)) > 0.5
    up = upsample_mask(m, factor)
    np.testing.assert_array_equal(up[::factor, ::factor], m)
