import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from resolve_seg.features import (
    EmptyRegionError,
    extract_features,
    lbp_label,
    n_features,
    region_histograms,
)
from resolve_seg.imaging import DimensionTooSmallError

# clockwise from the top-left neighbour, as (row, col) offsets
CLOCKWISE = [(0, 0), (0, 1), (0, 2), (1, 2), (2, 2), (2, 1), (2, 0), (1, 0)]


def lbp_oracle(img, y, x):
    """Code of source pixel (y, x) from a scalar neighbour walk."""
    c = img[y, x]
    code = 0
    for k, (dy, dx) in enumerate(CLOCKWISE):
        if img[y - 1 + dy, x - 1 + dx] >= c:
            code += 2**k
    return code


def test_hand_example_code_85():
    patch = np.zeros((3, 3))
    for (dy, dx), v in zip(CLOCKWISE, [6, 2, 7, 1, 9, 3, 8, 4]):
        patch[dy, dx] = v
    patch[1, 1] = 5
    assert lbp_label(patch)[0, 0] == 85


def test_constant_image_is_all_255():
    codes = lbp_label(np.full((6, 9), 42.0))
    assert codes.shape == (4, 7)
    assert np.all(codes == 255)


def test_raster_matches_scalar_oracle(rng):
    img = rng.integers(0, 256, (12, 10)).astype(float)
    codes = lbp_label(img)
    for y in range(1, 11):
        for x in range(1, 9):
            assert codes[y - 1, x - 1] == lbp_oracle(img, y, x)


@pytest.mark.parametrize("transform", [
    lambda v: v**2 / 255.0,
    lambda v: np.clip(v + 10, 0, 255),
    lambda v: 255.0 * np.sqrt(v / 255.0),
])
def test_monotonic_transform_invariance(rng, transform):
    # values kept below 245 so the clipped shift stays strictly increasing
    img = rng.integers(0, 245, (20, 20)).astype(float)
    np.testing.assert_array_equal(lbp_label(transform(img)), lbp_label(img))


def test_too_small():
    with pytest.raises(DimensionTooSmallError):
        lbp_label(np.zeros((2, 5)))


def test_constant_image_features_land_in_last_bin():
    f = extract_features(np.full((16, 16), 80.0), grid=(2, 2), bins=10).reshape(4, 10)
    np.testing.assert_array_equal(f[:, 9], 1.0)
    np.testing.assert_array_equal(f[:, :9], 0.0)


def test_block_counts_equal_region_interior_pixels(rng):
    img = rng.uniform(0, 255, (23, 17))
    hist = region_histograms(img, (4, 4), 10)
    # rows split at (0,5,11,17,23) and columns at (0,4,8,12,17), then the frame removed
    rows = [4, 6, 6, 5]
    cols = [3, 4, 4, 4]
    expected = [r * c for r in rows for c in cols]
    np.testing.assert_array_equal(hist.sum(axis=1), expected)
    assert hist.sum() == 21 * 15


def test_bins_against_brute_force_recount(rng):
    img = rng.integers(0, 256, (32, 32)).astype(float)
    f = extract_features(img, (4, 4), 10)
    assert len(f) == n_features() == 160
    pick = np.random.default_rng(7).choice(160, size=3, replace=False)
    for idx in pick:
        region, b = divmod(int(idx), 10)
        ri, rj = divmod(region, 4)
        count = total = 0
        for y in range(max(8 * ri, 1), min(8 * ri + 8, 31)):
            for x in range(max(8 * rj, 1), min(8 * rj + 8, 31)):
                total += 1
                code = lbp_oracle(img, y, x)
                count += (b * 25.6 <= code < (b + 1) * 25.6)
        assert f[idx] == pytest.approx(count / total, abs=1e-12)


def test_empty_region():
    with pytest.raises(EmptyRegionError):
        extract_features(np.zeros((5, 40)), grid=(4, 4))


@settings(max_examples=30, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(10, 30), st.integers(10, 30)),
              elements=st.floats(0, 255, allow_nan=False)))
def test_blocks_normalized(img):
    f = extract_features(img, (3, 3), 10).reshape(9, 10)
    np.testing.assert_allclose(f.sum(axis=1), 1.0, atol=1e-9)
    assert np.all((lbp_label(img) >= 0) & (lbp_label(img) <= 255))
