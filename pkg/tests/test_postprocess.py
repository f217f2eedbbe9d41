import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from skimage.morphology import thin

from amat.diskgeom import ScaleSet
from amat.encoding import compute_cost_volume
from amat.evaluate import mask_fmeasure
from amat.imagecore import LAB, Image, rgb_to_lab
from amat.postprocess import binary_mat, group_branches, simplify_branches
from amat.setcover import MatResult, MedialRecord, depth_from_records, greedy_cover, radius_map_from_records
from corpus import disk_mask, piecewise_image, shape_masks


def make_mat(records, h=64, w=64, radii=tuple(range(2, 42))):
    return MatResult(records=records, depth=depth_from_records(records, h, w),
                     radius_map=radius_map_from_records(records, h, w),
                     scales=ScaleSet(radii), height=h, width=w, space=LAB)


def covered(mat):
    return depth_from_records(mat.records, mat.height, mat.width) > 0


GRAY = (0.5, 0.5, 0.5)


def test_group_collinear_same_encoding():
    mat = make_mat([MedialRecord(20, 30, 5, GRAY), MedialRecord(22, 30, 5, GRAY)])
    assert group_branches(mat).num_branches == 1


def test_group_scale_gap_keeps_branches_apart():
    mat = make_mat([MedialRecord(30, 30, 5, GRAY), MedialRecord(31, 30, 40, GRAY)])
    labels = group_branches(mat)
    assert labels.num_branches == 2


def test_group_appearance_veto():
    recs = [MedialRecord(x, 20, 4, (0.0, 0.5, 0.5)) for x in range(10, 16)]
    recs += [MedialRecord(x, 20, 4, (1.0, 0.5, 0.5)) for x in range(17, 23)]
    labels = group_branches(make_mat(recs))
    assert labels.num_branches == 2
    assert set(labels.labels[:6]) == {1} and set(labels.labels[6:]) == {2}


def test_group_labels_contiguous_and_summaries():
    img, _ = piecewise_image(3, 48)
    scales = ScaleSet(tuple(range(2, 12)))
    mat = greedy_cover(compute_cost_volume(rgb_to_lab(img), scales), scales)
    labels = group_branches(mat)
    assert labels.labels.min() == 1
    assert set(labels.labels) == set(range(1, labels.num_branches + 1))
    assert labels.counts.sum() == len(mat)
    for b in range(1, labels.num_branches + 1):
        sel = labels.labels == b
        assert np.allclose(labels.means[b - 1], mat.encodings[sel].mean(axis=0))


def test_group_order_independent():
    img, _ = piecewise_image(4, 48)
    scales = ScaleSet(tuple(range(2, 12)))
    mat = greedy_cover(compute_cost_volume(rgb_to_lab(img), scales), scales)
    base = group_branches(mat).labels
    perm = np.random.default_rng(0).permutation(len(mat))
    shuffled = make_mat([mat.records[i] for i in perm], 48, 48, scales.radii)
    other = group_branches(shuffled).labels
    # same partition, possibly different ids
    back = np.empty_like(other)
    back[perm] = other
    pairs = set(zip(base, back))
    assert len(pairs) == len(set(base)) == len(set(back))


def test_group_empty_raises():
    with pytest.raises(ValueError):
        group_branches(make_mat([]))


def _lab_const(h, w):
    return Image(np.full((h, w, 3), 0.5), LAB)


def _simplify(records, h=64, w=64):
    mat = make_mat(records, h, w)
    labels = group_branches(mat)
    return mat, simplify_branches(mat, labels, _lab_const(h, w))


def test_simplify_thin_branch_unchanged():
    recs = [MedialRecord(x, 30, 6, GRAY) for x in range(15, 40)]
    mat, out = _simplify(recs)
    assert sorted((r.cx, r.cy) for r in out.records) == sorted((r.cx, r.cy) for r in recs)
    assert np.array_equal(covered(out), covered(mat))


def test_simplify_single_record_unchanged():
    mat, out = _simplify([MedialRecord(20, 20, 7, GRAY)])
    assert [(r.cx, r.cy, r.radius) for r in out.records] == [(20, 20, 7)]


def _thick(r, n):
    return [MedialRecord(x, y, r, GRAY) for y in (n // 2 - 1, n // 2) for x in range(n // 2 - 10, n // 2 + 11)]


@pytest.mark.parametrize("r", [10, 30])
def test_simplify_thick_segment_in_full_cover(r):
    n = 2 * r + 40
    thick = _thick(r, n)
    # dark background disks complete the cover and form their own branches
    bg = [MedialRecord(x, y, 6, (0.0, 0.0, 0.0)) for y in range(0, n, 8) for x in range(0, n, 8)]
    mat = make_mat(thick + bg, n, n)
    assert (mat.depth >= 1).all()
    out = simplify_branches(mat, group_branches(mat), _lab_const(n, n))
    assert (out.depth >= 1).all()
    branch = [rec for rec in out.records if rec.encoding == GRAY]
    assert len({rec.cy for rec in branch}) == 1
    before = depth_from_records(thick, n, n) > 0
    after = depth_from_records(branch, n, n) > 0
    assert abs(int(after.sum()) - int(before.sum())) <= 0.02 * before.sum()


def test_simplify_thick_segment_isolated():
    # nothing else covers the border: coverage forces radius r + 1 on the
    # centerline, so the excess area shrinks only like 1/r
    r = 30
    mat, out = _simplify(_thick(r, 100), 100, 100)
    assert len({rec.cy for rec in out.records}) == 1
    before = covered(mat)
    after = covered(out)
    assert not (before & ~after).any()
    assert after.sum() - before.sum() <= 1.5 / r * before.sum()


def test_simplify_preserves_coverage_on_pipeline_output():
    img, _ = piecewise_image(5, 48)
    lab = rgb_to_lab(img)
    scales = ScaleSet(tuple(range(2, 12)))
    mat = greedy_cover(compute_cost_volume(lab, scales), scales)
    out = simplify_branches(mat, group_branches(mat), lab)
    assert (out.depth >= 1).all()
    assert np.array_equal(out.depth, depth_from_records(out.records, 48, 48))
    assert len(out.labels) == len(out)
    assert all(r.radius in out.scales.radii for r in out.records)


def test_simplify_rejects_mismatched_labels():
    mat = make_mat([MedialRecord(20, 20, 7, GRAY)])
    other = group_branches(make_mat([MedialRecord(1, 1, 2, GRAY), MedialRecord(9, 9, 2, GRAY)]))
    with pytest.raises(ValueError):
        simplify_branches(mat, other, _lab_const(64, 64))


def test_binary_mat_disk():
    mask = disk_mask(41, 41, 20, 20, 10)
    shape = binary_mat(mask)
    assert np.array_equal(shape.reconstruct(), mask)
    assert shape.radii[20, 20] == 10
    assert shape.axis[20, 20]
    # a handful of points at most, all near the center
    ys, xs = np.nonzero(shape.axis)
    assert len(ys) <= 5 and np.abs(ys - 20).max() <= 2 and np.abs(xs - 20).max() <= 2


def test_binary_mat_bar():
    mask = np.zeros((15, 60), bool)
    mask[5:10, 5:55] = True
    shape = binary_mat(mask)
    ys, _ = np.nonzero(shape.axis)
    assert np.median(ys) == 7
    assert set(np.unique(shape.radii[shape.axis])) <= {1, 2, 3}
    rec = shape.reconstruct()
    assert not (mask & ~rec).any()
    assert mask_fmeasure(rec, mask, band=1) == 1.0


def test_binary_mat_single_pixel():
    mask = np.zeros((5, 5), bool)
    mask[2, 3] = True
    shape = binary_mat(mask)
    assert np.array_equal(shape.axis, mask)
    assert shape.radii[2, 3] == 1


def test_binary_mat_empty_raises():
    with pytest.raises(ValueError):
        binary_mat(np.zeros((4, 4), bool))


@pytest.mark.parametrize("name", sorted(shape_masks()))
def test_binary_mat_corpus(name):
    mask = shape_masks()[name]
    shape = binary_mat(mask)
    rec = shape.reconstruct()
    assert not (shape.axis & ~mask).any()
    assert not (mask & ~rec).any()
    assert mask_fmeasure(rec, mask, band=1) == 1.0
    # axis contains the thinned skeleton
    assert not (thin(mask) & ~shape.axis).any()


@settings(max_examples=30, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 23), st.integers(0, 23), st.integers(1, 6)), min_size=1, max_size=5))
def test_binary_mat_union_of_disks(disks):
    mask = np.zeros((24, 24), bool)
    for cy, cx, r in disks:
        mask |= disk_mask(24, 24, cy, cx, r)
    rec = binary_mat(mask).reconstruct()
    assert not (mask & ~rec).any()
    assert mask_fmeasure(rec, mask, band=1) == 1.0


@pytest.mark.parametrize("name", ["disk", "square", "bar", "lshape", "region03", "region11"])
def test_binary_mat_strict_is_exact(name):
    mask = shape_masks()[name]
    shape = binary_mat(mask, strict=True)
    assert np.array_equal(shape.reconstruct(), mask)
    assert not (shape.axis & ~mask).any()


def test_binary_mat_strict_single_pixel_has_radius_zero():
    mask = np.zeros((5, 5), bool)
    mask[2, 3] = True
    shape = binary_mat(mask, strict=True)
    assert shape.axis[2, 3] and shape.radii[2, 3] == 0
