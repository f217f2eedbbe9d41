"""Branch grouping, branch simplification and the binary-shape MAT."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage as ndi
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree
from skimage.morphology import thin

from .diskgeom import DiskSpec, ScaleSet, disk_offsets
from .encoding import encode
from .imagecore import Image
from .setcover import MatResult, MedialRecord, _stamp, depth_from_records, radius_map_from_records

DEFAULT_TAU = 0.1
SCALE_WINDOW = 3
_EIGHT = np.ones((3, 3), dtype=bool)


@dataclass(frozen=True)
class BranchLabeling:
    """Branch id (1..B) per record, with per-branch mean encoding and size."""

    labels: np.ndarray
    means: np.ndarray
    counts: np.ndarray

    @property
    def num_branches(self) -> int:
        return len(self.counts)


@dataclass(frozen=True)
class BinaryShapeMat:
    mask: np.ndarray
    axis: np.ndarray
    radii: np.ndarray

    def reconstruct(self) -> np.ndarray:
        cover = np.zeros(self.mask.shape, dtype=np.int64)
        for y, x in zip(*np.nonzero(self.axis)):
            _stamp(cover, y, x, int(self.radii[y, x]), 1)
        return cover > 0


def _components(n, a, b) -> np.ndarray:
    graph = coo_matrix((np.ones(len(a), dtype=np.int8), (a, b)), shape=(n, n))
    return connected_components(graph, directed=False)[1]


def _branch_means(comp, enc, n_comp):
    counts = np.bincount(comp, minlength=n_comp)
    sums = np.stack([np.bincount(comp, weights=enc[:, c], minlength=n_comp)
                     for c in range(enc.shape[1])], axis=1)
    return sums / np.maximum(counts, 1)[:, None]


def _canonical(comp: np.ndarray) -> np.ndarray:
    """Relabel components 1..B in order of first appearance."""
    _, first = np.unique(comp, return_index=True)
    order = np.argsort(first)
    relabel = np.empty(len(first), dtype=np.int64)
    relabel[order] = np.arange(1, len(first) + 1)
    _, inverse = np.unique(comp, return_inverse=True)
    return relabel[inverse.reshape(-1)]


def group_branches(mat: MatResult, tau: float = DEFAULT_TAU) -> BranchLabeling:
    """Agglomerate medial points into branches from fine to coarse scales.

    Branches start as 8-connected groups of centers whose scale indices are
    at most three steps apart. At each scale r_j, points with radii in
    [r_{j-3}, r_j] that lie within an r_j x r_j window of each other link
    their branches when the branch mean encodings are closer than `tau`.
    Links found at one scale are judged with the means from the start of
    that scale and merged transitively; means are refreshed before the next.
    """
    if not mat.records:
        raise ValueError("cannot group an empty MAT")
    centers = mat.centers
    enc = mat.encodings
    scale_idx = np.array([mat.scales.index(r) for r in mat.radii])
    n = len(centers)

    tree = cKDTree(centers)
    pairs = tree.query_pairs(1, p=np.inf, output_type="ndarray")
    if len(pairs):
        pairs = pairs[np.abs(scale_idx[pairs[:, 0]] - scale_idx[pairs[:, 1]]) <= SCALE_WINDOW]
    comp = _components(n, pairs[:, 0], pairs[:, 1]) if len(pairs) else np.arange(n)

    for j, r in enumerate(mat.scales.radii):
        lo = max(0, j - SCALE_WINDOW)
        cand = np.flatnonzero((scale_idx >= lo) & (scale_idx <= j))
        if len(cand) < 2:
            continue
        local = cKDTree(centers[cand]).query_pairs(max(1, r // 2), p=np.inf, output_type="ndarray")
        if not len(local):
            continue
        a = comp[cand[local[:, 0]]]
        b = comp[cand[local[:, 1]]]
        n_comp = comp.max() + 1
        means = _branch_means(comp, enc, n_comp)
        keep = (a != b) & (np.linalg.norm(means[a] - means[b], axis=1) < tau)
        if not keep.any():
            continue
        merged = _components(n_comp, a[keep], b[keep])
        comp = merged[comp]

    labels = _canonical(comp)
    n_branches = labels.max()
    counts = np.bincount(labels, minlength=n_branches + 1)[1:]
    means = _branch_means(labels - 1, enc, n_branches)
    return BranchLabeling(labels=labels, means=means, counts=counts)


def _ceil_sqrt(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=np.int64)
    root = np.floor(np.sqrt(v)).astype(np.int64)
    root = np.where(root * root > v, root - 1, root)
    return np.where(root * root < v, root + 1, root)


def _thin_branch(mask: np.ndarray) -> np.ndarray:
    thinned = thin(mask)
    if np.array_equal(thinned, mask):
        return mask
    return thin(ndi.binary_dilation(mask, _EIGHT))


def _ring(cy, cx, radius, h, w):
    """Pixels at the outermost radius: disk(r) minus disk(r - 1), clipped."""
    outer = disk_offsets(radius)
    d2 = (outer ** 2).sum(axis=1)
    pts = outer[d2 > (radius - 1) ** 2] + np.array([cy, cx])
    keep = (pts[:, 0] >= 0) & (pts[:, 0] < h) & (pts[:, 1] >= 0) & (pts[:, 1] < w)
    return pts[keep]


def simplify_branches(mat: MatResult, labels: BranchLabeling, image: Image,
                      max_deficit: float = 0.02) -> MatResult:
    """Thin each branch to a 1-pixel curve and re-fit radii to its area.

    Every original point hands its disk to the nearest retained point, whose
    radius grows until it contains that disk, so the cover is preserved.
    Radii are then shrunk one step at a time, largest first, while the branch
    still covers more than its original area and no pixel covered before
    loses its last covering disk. A branch may end at most `max_deficit`
    below its original area. Retained points are re-encoded from `image`.
    Branches that thinning would not make sparser are kept as they are.
    """
    if len(labels.labels) != len(mat.records):
        raise ValueError("labels do not match the MAT records")
    h, w = mat.height, mat.width
    centers = mat.centers
    radii = mat.radii
    depth = depth_from_records(mat.records, h, w)
    needed = depth > 0
    original = {(rec.cy, rec.cx, rec.radius): rec for rec in mat.records}

    out_records: list[MedialRecord] = []
    out_labels: list[int] = []
    for b in range(1, labels.num_branches + 1):
        members = np.flatnonzero(labels.labels == b)
        pts = centers[members]
        rads = radii[members]
        mask = np.zeros((h, w), dtype=bool)
        mask[pts[:, 0], pts[:, 1]] = True
        kept = np.argwhere(_thin_branch(mask))
        if len(kept) >= len(members):
            # thinning would not make the branch sparser
            out_records.extend(mat.records[i] for i in members)
            out_labels.extend([b] * len(members))
            continue

        before = np.zeros((h, w), dtype=np.int64)
        for (y, x), r in zip(pts, rads):
            _stamp(before, y, x, int(r), 1)
        area_before = int((before > 0).sum())

        d2_all = ((kept[:, None, :] - pts[None, :, :]) ** 2).sum(axis=2)
        owner = np.argmin(d2_all, axis=0)  # nearest retained point, row-major on ties
        new_r = np.zeros(len(kept), dtype=np.int64)
        reach = rads + _ceil_sqrt(d2_all[owner, np.arange(len(pts))])
        np.maximum.at(new_r, owner, reach)
        # retained points that own nothing: largest disk inside a neighbor's disk
        orphan = new_r == 0
        if orphan.any():
            inner = rads[None, :] - _ceil_sqrt(d2_all[orphan])
            new_r[orphan] = np.maximum(inner.max(axis=1), 1)

        depth -= before
        after = np.zeros((h, w), dtype=np.int64)
        for (y, x), r in zip(kept, new_r):
            _stamp(after, y, x, int(r), 1)
        depth += after
        area_after = int((after > 0).sum())
        floor_area = (1.0 - max_deficit) * area_before

        changed = True
        while changed and area_after > area_before:
            changed = False
            order = sorted(range(len(kept)), key=lambda i: (-new_r[i], kept[i][0], kept[i][1]))
            for i in order:
                if area_after <= area_before:
                    break
                r = int(new_r[i])
                if r <= 1:
                    continue
                y, x = kept[i]
                ring = _ring(y, x, r, h, w)
                if ((depth[ring[:, 0], ring[:, 1]] < 2) & needed[ring[:, 0], ring[:, 1]]).any():
                    continue
                lost = int((after[ring[:, 0], ring[:, 1]] == 1).sum())
                if area_after - lost < floor_area:
                    continue
                after[ring[:, 0], ring[:, 1]] -= 1
                depth[ring[:, 0], ring[:, 1]] -= 1
                area_after -= lost
                new_r[i] = r - 1
                changed = True

        for (y, x), r in zip(kept, new_r):
            y, x, r = int(y), int(x), int(r)
            prev = original.get((y, x, r))
            enc = prev.encoding if prev is not None else tuple(
                float(v) for v in encode(image, DiskSpec(x, y, r)))
            out_records.append(MedialRecord(x, y, r, enc))
            out_labels.append(b)

    all_radii = sorted(set(mat.scales.radii) | {rec.radius for rec in out_records})
    return MatResult(
        records=out_records,
        depth=depth_from_records(out_records, h, w),
        radius_map=radius_map_from_records(out_records, h, w),
        scales=ScaleSet(tuple(all_radii), mat.scales.ws),
        height=h,
        width=w,
        space=mat.space,
        labels=np.asarray(out_labels, dtype=np.int64),
    )


def binary_mat(mask, strict: bool = False) -> BinaryShapeMat:
    """Medial axis of a binary shape with distance-transform radii.

    Axis points come from thinning the shape; each carries the floor of its
    Euclidean distance to the background, so disks may touch background
    pixels at exactly that distance. With `strict` the radius is the largest
    one whose disk stays inside the shape (0 for boundary pixels). Shape
    pixels left uncovered (corners the thinning cut off) are then covered
    row-major by the largest disk that reaches them.
    """
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        raise ValueError("empty mask")
    h, w = mask.shape
    edt = ndi.distance_transform_edt(mask)
    if strict:
        radius = np.maximum(np.ceil(edt).astype(np.int64) - 1, 0)
    else:
        radius = np.floor(edt).astype(np.int64)
    axis = thin(mask)
    cover = np.zeros((h, w), dtype=np.int64)
    for y, x in zip(*np.nonzero(axis)):
        _stamp(cover, y, x, int(radius[y, x]), 1)

    r_max = int(radius.max())
    for qy, qx in zip(*np.nonzero(mask & (cover == 0))):
        if cover[qy, qx]:
            continue
        y0, y1 = max(0, qy - r_max), min(h, qy + r_max + 1)
        x0, x1 = max(0, qx - r_max), min(w, qx + r_max + 1)
        yy, xx = np.mgrid[y0:y1, x0:x1]
        win = radius[y0:y1, x0:x1]
        reach = (yy - qy) ** 2 + (xx - qx) ** 2 <= win ** 2
        score = np.where(reach & mask[y0:y1, x0:x1], win, -1)
        flat = int(np.argmax(score))  # first maximum is row-major
        py, px = yy.flat[flat], xx.flat[flat]
        axis[py, px] = True
        _stamp(cover, py, px, int(radius[py, px]), 1)

    return BinaryShapeMat(mask=mask, axis=axis, radii=np.where(axis, radius, 0))
