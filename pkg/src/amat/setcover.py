"""Greedy weighted geometric set cover over image disks."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numba
import numpy as np

from .diskgeom import DiskSpec, ScaleSet, disk_offsets, half_widths
from .encoding import CostVolume
from .imagecore import LAB

OVERLAP = "overlap"
LITERAL = "literal"


@dataclass(frozen=True)
class MedialRecord:
    cx: int
    cy: int
    radius: int
    encoding: tuple[float, ...]

    @property
    def disk(self) -> DiskSpec:
        return DiskSpec(self.cx, self.cy, self.radius)


@dataclass
class MatResult:
    """Selected medial records plus per-pixel depth and radius maps."""

    records: list[MedialRecord]
    depth: np.ndarray
    radius_map: np.ndarray
    scales: ScaleSet
    height: int
    width: int
    space: str = LAB
    labels: np.ndarray | None = None
    eff_costs: np.ndarray | None = field(default=None, repr=False)

    def __len__(self):
        return len(self.records)

    @property
    def centers(self) -> np.ndarray:
        """(m, 2) array of (row, col)."""
        return np.array([(r.cy, r.cx) for r in self.records], dtype=np.int64).reshape(-1, 2)

    @property
    def radii(self) -> np.ndarray:
        return np.array([r.radius for r in self.records], dtype=np.int64)

    @property
    def encodings(self) -> np.ndarray:
        return np.array([r.encoding for r in self.records], dtype=np.float64).reshape(len(self.records), -1)

    def axis_mask(self) -> np.ndarray:
        mask = np.zeros((self.height, self.width), dtype=bool)
        c = self.centers
        mask[c[:, 0], c[:, 1]] = True
        return mask


def depth_from_records(records, height: int, width: int) -> np.ndarray:
    depth = np.zeros((height, width), dtype=np.int64)
    for rec in records:
        _stamp(depth, rec.cy, rec.cx, rec.radius, 1)
    return depth


def radius_map_from_records(records, height: int, width: int) -> np.ndarray:
    rmap = np.zeros((height, width), dtype=np.int64)
    for rec in records:
        rmap[rec.cy, rec.cx] = max(rmap[rec.cy, rec.cx], rec.radius)
    return rmap


def _stamp(target, cy, cx, radius, value):
    pts = disk_offsets(radius) + np.array([cy, cx])
    h, w = target.shape[:2]
    keep = (pts[:, 0] >= 0) & (pts[:, 0] < h) & (pts[:, 1] >= 0) & (pts[:, 1] < w)
    pts = pts[keep]
    target[pts[:, 0], pts[:, 1]] += value


def effective_cost(cost: float, new_pixels: int, radius: int, ws: float) -> float:
    if new_pixels <= 0:
        return math.inf
    return cost / new_pixels + ws / radius


def _half_width_table(radii) -> np.ndarray:
    r_max = max(radii)
    table = np.full((len(radii), 2 * r_max + 1), -1, dtype=np.int64)
    for k, r in enumerate(radii):
        table[k, r_max - r:r_max + r + 1] = half_widths(r)
    return table


@numba.njit(cache=True)
def _pixel_best(cost, remaining, radii, ws, y, x):
    # descending radius with strict '<' keeps the larger radius on ties
    best_e = np.inf
    best_k = -1
    for k in range(radii.shape[0] - 1, -1, -1):
        a = remaining[y, x, k]
        if a > 0:
            e = cost[y, x, k] / a + ws / radii[k]
            if e < best_e:
                best_e = e
                best_k = k
    return best_e, best_k


@numba.njit(cache=True)
def _greedy_kernel(cost, area, radii, hw_table, ws, literal):
    h, w, n_scales = cost.shape
    r_max = radii[n_scales - 1]
    remaining = area.copy()
    covered = np.zeros((h, w), dtype=np.bool_)
    depth = np.zeros((h, w), dtype=np.int64)
    best_e = np.empty((h, w))
    best_k = np.empty((h, w), dtype=np.int64)
    for y in range(h):
        for x in range(w):
            best_e[y, x], best_k[y, x] = _pixel_best(cost, remaining, radii, ws, y, x)

    sel_y = np.empty(h * w, dtype=np.int64)
    sel_x = np.empty(h * w, dtype=np.int64)
    sel_k = np.empty(h * w, dtype=np.int64)
    sel_e = np.empty(h * w)
    run_x0 = np.empty(h * w, dtype=np.int64)
    run_x1 = np.empty(h * w, dtype=np.int64)
    run_row = np.empty(h * w, dtype=np.int64)

    left = h * w
    n_sel = 0
    while left > 0:
        # global argmin: effective cost, then radius, then new pixels, then row-major
        ge = np.inf
        gy = -1
        gx = -1
        gr = -1
        ga = -1
        for y in range(h):
            for x in range(w):
                e = best_e[y, x]
                if e > ge:
                    continue
                k = best_k[y, x]
                if k < 0:
                    continue
                r = radii[k]
                a = remaining[y, x, k]
                if e < ge or r > gr or (r == gr and a > ga):
                    ge = e
                    gy = y
                    gx = x
                    gr = r
                    ga = a
        if gy < 0:
            break
        ks = best_k[gy, gx]
        rs = radii[ks]

        # runs of newly covered pixels, one or more per disk row
        n_runs = 0
        n_new = 0
        for dy in range(-rs, rs + 1):
            yy = gy + dy
            if yy < 0 or yy >= h:
                continue
            hw = hw_table[ks, r_max + dy]
            x_lo = max(0, gx - hw)
            x_hi = min(w - 1, gx + hw)
            xx = x_lo
            while xx <= x_hi:
                if covered[yy, xx]:
                    xx += 1
                    continue
                start = xx
                while xx <= x_hi and not covered[yy, xx]:
                    xx += 1
                run_row[n_runs] = yy
                run_x0[n_runs] = start
                run_x1[n_runs] = xx - 1
                n_runs += 1
                n_new += xx - start

        # per scale: new-pixel count inside every disk of the update window,
        # built from trapezoid second differences of each run
        for k in range(n_scales):
            r = radii[k]
            span = rs + r
            n_rows = 2 * span + 1
            n_cols = 2 * span + 5
            dd = np.zeros((n_rows, n_cols), dtype=np.int64)
            col0 = gx - span - 2
            for t in range(n_runs):
                yy = run_row[t]
                x0 = run_x0[t]
                x1 = run_x1[t]
                for dy in range(-r, r + 1):
                    py = yy - dy
                    if py < 0 or py >= h:
                        continue
                    hw = hw_table[k, r_max + dy]
                    row = py - (gy - span)
                    dd[row, x0 - hw - col0] += 1
                    dd[row, x1 - hw + 1 - col0] -= 1
                    dd[row, x0 + hw + 1 - col0] -= 1
                    dd[row, x1 + hw + 2 - col0] += 1
            lim2 = (r + rs) * (r + rs)
            for row in range(n_rows):
                py = gy - span + row
                if py < 0 or py >= h:
                    continue
                slope = 0
                val = 0
                for c in range(n_cols):
                    slope += dd[row, c]
                    val += slope
                    px = col0 + c
                    if px < 0 or px >= w:
                        continue
                    if literal:
                        ddy = py - gy
                        ddx = px - gx
                        if ddy * ddy + ddx * ddx <= lim2:
                            cost[py, px, k] = cost[py, px, k] - cost[py, px, k] / n_new
                    elif val > 0:
                        cost[py, px, k] = cost[py, px, k] * (1.0 - val / area[py, px, k])
                    if val > 0:
                        remaining[py, px, k] -= val

        for t in range(n_runs):
            yy = run_row[t]
            for xx in range(run_x0[t], run_x1[t] + 1):
                covered[yy, xx] = True
        for dy in range(-rs, rs + 1):
            yy = gy + dy
            if yy < 0 or yy >= h:
                continue
            hw = hw_table[ks, r_max + dy]
            for xx in range(max(0, gx - hw), min(w - 1, gx + hw) + 1):
                depth[yy, xx] += 1
        left -= n_new
        sel_y[n_sel] = gy
        sel_x[n_sel] = gx
        sel_k[n_sel] = ks
        sel_e[n_sel] = ge
        n_sel += 1

        span = rs + r_max
        for y in range(max(0, gy - span), min(h, gy + span + 1)):
            for x in range(max(0, gx - span), min(w, gx + span + 1)):
                best_e[y, x], best_k[y, x] = _pixel_best(cost, remaining, radii, ws, y, x)

    return sel_y[:n_sel], sel_x[:n_sel], sel_k[:n_sel], sel_e[:n_sel], depth


def greedy_cover(vol: CostVolume, scales: ScaleSet | None = None, discount: str = OVERLAP) -> MatResult:
    """Cover every pixel with disks, repeatedly taking the cheapest one.

    Each round picks the disk minimizing cost / new_pixels + ws / radius
    (ties: larger radius, then more new pixels, then row-major center).
    Disks overlapping the newly covered pixels are discounted: with
    ``discount="overlap"`` a disk's cost is scaled by (1 - overlap / area);
    ``discount="literal"`` instead subtracts cost / |new pixels of the
    selected disk| from every intersecting disk.
    """
    scales = scales or vol.scales
    if tuple(scales.radii) != tuple(vol.scales.radii):
        raise ValueError("cost volume was computed for different radii")
    if discount not in (OVERLAP, LITERAL):
        raise ValueError(f"unknown discount rule {discount!r}")
    radii = np.asarray(scales.radii, dtype=np.int64)
    ys, xs, ks, es, depth = _greedy_kernel(
        vol.cost.copy(), vol.area.astype(np.int64), radii,
        _half_width_table(scales.radii), float(scales.ws), discount == LITERAL)
    records = [
        MedialRecord(int(x), int(y), int(radii[k]), tuple(float(v) for v in vol.enc[y, x, k]))
        for y, x, k in zip(ys, xs, ks)
    ]
    h, w = vol.height, vol.width
    return MatResult(
        records=records,
        depth=depth,
        radius_map=radius_map_from_records(records, h, w),
        scales=scales,
        height=h,
        width=w,
        space=LAB,
        eff_costs=es,
    )
