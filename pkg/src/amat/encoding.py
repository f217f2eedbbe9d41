"""Disk encodings (per-channel means), decoding, and the disk cost volume.

The cost of disk (i, j) sums squared distances between its encoding and the
encodings of every disk it contains:

    c_ij = sum_{k,l} ||f_ij - f_kl||^2,   over D_kl inside D_ij

With containment decided by ||p_k - p_i|| <= r_j - r_l, the inner sums over k
are disk sums of radius r_j - r_l, so the volume follows from

    c_ij = sum ||f_kl||^2 - 2 f_ij . sum f_kl + n_ij ||f_ij||^2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .diskgeom import DiskSpec, ScaleSet, disk_pixels, half_widths
from .imagecore import LAB, Image

# Costs below this fraction of the magnitude of the expanded terms are
# floating-point residue of the cancellation and are snapped to zero.
_CANCEL_FLOOR = 1e-12


@dataclass(frozen=True)
class CostVolume:
    """Per-pixel, per-scale disk statistics.

    enc:   (H, W, R, C) disk means
    cost:  (H, W, R) disk cost, >= 0
    count: (H, W, R) number of contained disks (self included)
    area:  (H, W, R) pixel count of each border-clipped disk
    """

    scales: ScaleSet
    enc: np.ndarray
    cost: np.ndarray
    count: np.ndarray
    area: np.ndarray

    @property
    def height(self) -> int:
        return self.cost.shape[0]

    @property
    def width(self) -> int:
        return self.cost.shape[1]

    @property
    def num_scales(self) -> int:
        return self.cost.shape[2]


def disk_sum(arr: np.ndarray, radius: int) -> np.ndarray:
    """Sum of `arr` over the radius-r disk around every pixel (zero outside).

    Works on (H, W) or (H, W, C) arrays via row-wise prefix sums, one shifted
    difference per disk row.
    """
    arr = np.asarray(arr, dtype=np.float64)
    r = int(radius)
    if r == 0:
        return arr.copy()
    h, w = arr.shape[:2]
    extra = [(0, 0)] * (arr.ndim - 2)
    padded = np.pad(arr, [(r, r), (r + 1, r)] + extra)
    cum = np.cumsum(padded, axis=1)
    out = np.zeros_like(arr)
    for dy, hw in zip(range(-r, r + 1), half_widths(r)):
        rows = cum[r + dy:r + dy + h]
        out += rows[:, r + 1 + hw:r + 1 + hw + w]
        out -= rows[:, r - hw:r - hw + w]
    return out


def disk_area(height: int, width: int, radius: int) -> np.ndarray:
    """Clipped pixel count of the radius-r disk at every center (exact ints)."""
    return np.rint(disk_sum(np.ones((height, width)), radius)).astype(np.int64)


def encode(img: Image, d: DiskSpec) -> np.ndarray:
    """Mean of each channel over the border-clipped disk."""
    pts = disk_pixels(d, img.height, img.width)
    return img.data[pts[:, 0], pts[:, 1]].mean(axis=0)


def decode(e, d: DiskSpec, height: int, width: int):
    """Replicate an encoding over the disk; returns (pixels, values)."""
    pts = disk_pixels(d, height, width)
    e = np.asarray(e, dtype=np.float64)
    return pts, np.broadcast_to(e, (len(pts), e.size)).copy()


def encoding_maps(img: Image, scales: ScaleSet) -> tuple[np.ndarray, np.ndarray]:
    """Disk means and clipped areas for every center and scale."""
    h, w, c = img.shape
    enc = np.empty((h, w, len(scales), c))
    area = np.empty((h, w, len(scales)), dtype=np.int64)
    ones = np.ones((h, w, 1))
    stacked = np.concatenate([img.data, ones], axis=2)
    for k, r in enumerate(scales.radii):
        s = disk_sum(stacked, r)
        area[:, :, k] = np.rint(s[:, :, c])
        enc[:, :, k] = s[:, :, :c] / area[:, :, k, None]
    np.clip(enc, 0.0, 1.0, out=enc)
    return enc, area


def compute_cost_volume(img: Image, scales: ScaleSet) -> CostVolume:
    if img.space != LAB:
        raise ValueError("cost volume expects a LAB image")
    h, w, c = img.shape
    side = 2 * scales.r_min + 1
    if h < side or w < side:
        raise ValueError(
            f"image {w}x{h} too small for smallest radius {scales.r_min}")

    enc, area = encoding_maps(img, scales)
    sq = (enc ** 2).sum(axis=3)
    radii = scales.radii
    n_scales = len(radii)

    cost = np.empty((h, w, n_scales))
    count = np.empty((h, w, n_scales), dtype=np.int64)
    ones = np.ones((h, w, 1))
    # per contained scale l: [enc_l (c channels), ||enc_l||^2, 1]
    stacks = [np.concatenate([enc[:, :, l], sq[:, :, l, None], ones], axis=2)
              for l in range(n_scales)]
    for j in range(n_scales):
        acc = np.zeros((h, w, c + 2))
        for l in range(j + 1):
            acc += disk_sum(stacks[l], radii[j] - radii[l])
        s1 = acc[:, :, :c]
        s2 = acc[:, :, c]
        n = np.rint(acc[:, :, c + 1])
        fj = enc[:, :, j]
        magnitude = s2 + n * sq[:, :, j]
        cj = magnitude - 2.0 * (fj * s1).sum(axis=2)
        cj[cj <= _CANCEL_FLOOR * magnitude] = 0.0
        cost[:, :, j] = cj
        count[:, :, j] = n
    return CostVolume(scales=scales, enc=enc, cost=cost, count=count, area=area)
