import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from amat.diskgeom import DiskSpec, ScaleSet, disk_offsets
from amat.encoding import compute_cost_volume, decode, disk_area, disk_sum, encode, encoding_maps
from amat.imagecore import LAB, RGB, Image
from oracles import ball, brute_cost_volume


def lab(data):
    return Image(np.asarray(data, dtype=np.float64), LAB)


def test_encode_constant():
    img = lab(np.tile([0.3, 0.5, 0.5], (12, 12, 1)))
    assert np.allclose(encode(img, DiskSpec(3, 4, 3)), [0.3, 0.5, 0.5])


def test_encode_half_plane_on_boundary():
    data = np.zeros((21, 21, 3))
    data[:, 11:, 0] = 1.0
    data[:, 10, 0] = 0.5  # the boundary column itself
    d = DiskSpec(10, 10, 5)
    offs = disk_offsets(5)
    n = len(offs)
    right = (offs[:, 1] > 0).sum()
    middle = (offs[:, 1] == 0).sum()
    e = encode(lab(data), d)
    assert e[0] == pytest.approx((right + 0.5 * middle) / n)
    assert abs(e[0] - 0.5) <= 1 / n


def test_encode_clipped_corner_on_ramp():
    yy, xx = np.mgrid[0:10, 0:10]
    data = np.stack([yy / 9, xx / 9, (yy + xx) / 18], axis=2)
    e = encode(lab(data), DiskSpec(0, 0, 3))
    pix = ball(0, 0, 3, 10, 10)
    ref = np.mean([data[p] for p in pix], axis=0)
    assert np.allclose(e, ref, atol=1e-12)


def test_decode_replicates():
    pts, vals = decode((0.2, 0.4, 0.6), DiskSpec(5, 5, 2), 20, 20)
    assert len(pts) == 13
    assert np.allclose(vals, [0.2, 0.4, 0.6])


def test_decode_encode_constant_patch():
    img = lab(np.tile([0.7, 0.2, 0.9], (9, 9, 1)))
    d = DiskSpec(4, 4, 3)
    pts, vals = decode(encode(img, d), d, 9, 9)
    assert np.allclose(vals, img.data[pts[:, 0], pts[:, 1]], rtol=0, atol=1e-15)


def test_decode_error_equals_variance_times_count():
    data = np.zeros((15, 15, 3))
    data[:, 8:] = [0.9, 0.1, 0.4]
    img = lab(data)
    d = DiskSpec(7, 7, 4)
    pts, vals = decode(encode(img, d), d, 15, 15)
    src = img.data[pts[:, 0], pts[:, 1]]
    sq_err = ((vals - src) ** 2).sum()
    assert sq_err == pytest.approx(src.var(axis=0).sum() * len(pts), rel=1e-12)


def test_disk_sum_and_area_match_enumeration():
    rng = np.random.default_rng(1)
    arr = rng.uniform(size=(11, 13))
    for r in (1, 2, 5, 9):
        fast = disk_sum(arr, r)
        area = disk_area(11, 13, r)
        for y in range(11):
            for x in range(13):
                pix = ball(y, x, r, 11, 13)
                assert fast[y, x] == pytest.approx(sum(arr[p] for p in pix), abs=1e-10)
                assert area[y, x] == len(pix)


def test_encoding_maps_match_direct_sum():
    rng = np.random.default_rng(2)
    img = lab(rng.uniform(size=(14, 10, 3)))
    scales = ScaleSet((2, 3, 5))
    enc, _ = encoding_maps(img, scales)
    for y in range(14):
        for x in range(10):
            for k, r in enumerate(scales.radii):
                assert np.allclose(enc[y, x, k], encode(img, DiskSpec(x, y, r)), atol=1e-9)


def test_constant_image_has_zero_cost():
    vol = compute_cost_volume(lab(np.full((24, 24, 3), 0.42)), ScaleSet((2, 4, 6)))
    assert np.all(vol.cost == 0.0)


def test_smallest_scale_cost_is_zero():
    rng = np.random.default_rng(3)
    vol = compute_cost_volume(lab(rng.uniform(size=(16, 16, 3))), ScaleSet((2, 3, 4)))
    assert np.all(vol.cost[:, :, 0] == 0.0)
    assert np.all(vol.count[:, :, 0] == 1)
    assert np.all(vol.cost >= 0)


def test_two_region_costs():
    data = np.zeros((32, 32, 3))
    data[:, 16:] = [1.0, 0.5, 0.5]
    vol = compute_cost_volume(lab(data), ScaleSet((2, 4)))
    # radius-4 disk far inside the left region
    assert vol.cost[16, 6, 1] == 0.0
    # slide the disk across the boundary: overlap with the right region grows
    seq = [vol.cost[16, x, 1] for x in range(12, 16)]
    assert seq[0] > 0
    assert all(a < b for a, b in zip(seq, seq[1:]))
    _, brute, _ = brute_cost_volume(data[8:24, 4:28], (2, 4))
    # interior pixels of the crop see the same contained disks
    assert np.allclose(vol.cost[16, 12:16, 1], brute[8, 8:12, 1], rtol=1e-6)


def test_cost_volume_matches_brute_force():
    rng = np.random.default_rng(4)
    data = rng.uniform(size=(12, 12, 3))
    scales = ScaleSet((2, 3, 5))
    vol = compute_cost_volume(lab(data), scales)
    enc, cost, count = brute_cost_volume(data, scales.radii)
    assert np.allclose(vol.enc, enc, atol=1e-9)
    assert np.allclose(vol.cost, cost, rtol=1e-6, atol=1e-12)
    assert np.array_equal(vol.count, count)


def test_cost_volume_preconditions():
    with pytest.raises(ValueError, match="LAB"):
        compute_cost_volume(Image(np.zeros((8, 8, 3)), RGB), ScaleSet((2,)))
    with pytest.raises(ValueError, match="too small"):
        compute_cost_volume(lab(np.zeros((4, 8, 3))), ScaleSet((2,)))


@settings(max_examples=15, deadline=None)
@given(arrays(np.float64, (9, 9, 3), elements=st.floats(0, 1)),
       st.lists(st.integers(1, 4), min_size=1, max_size=3, unique=True).map(sorted))
def test_cost_volume_property_oracle(data, radii):
    vol = compute_cost_volume(lab(data), ScaleSet(tuple(radii)))
    enc, cost, count = brute_cost_volume(data, radii)
    assert np.allclose(vol.cost, cost, rtol=1e-6, atol=1e-12)
    assert np.array_equal(vol.count, count)
    assert (vol.enc >= 0).all() and (vol.enc <= 1).all()
