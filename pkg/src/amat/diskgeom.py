"""Disk rasterization, containment and scale sets."""

from __future__ import annotations

import math

from dataclasses import dataclass
from functools import lru_cache

import numpy as np


@dataclass(frozen=True)
class ScaleSet:
    """Increasing integer radii plus the weight of the w_s / r scale term."""

    radii: tuple[int, ...] = tuple(range(2, 42))
    ws: float = 1e-4

    def __post_init__(self):
        radii = tuple(int(r) for r in self.radii)
        if not radii:
            raise ValueError("empty scale set")
        if any(b <= a for a, b in zip(radii, radii[1:])):
            raise ValueError("radii must be strictly increasing")
        if radii[0] < 0:
            raise ValueError("radii must be non-negative")
        if self.ws < 0:
            raise ValueError("ws must be non-negative")
        object.__setattr__(self, "radii", radii)

    def __len__(self):
        return len(self.radii)

    @property
    def r_min(self) -> int:
        return self.radii[0]

    @property
    def r_max(self) -> int:
        return self.radii[-1]

    def index(self, radius: int) -> int:
        return self.radii.index(int(radius))


def parse_scales(spec: str) -> tuple[int, ...]:
    """Expand "lo:hi" into consecutive integers, or "a,b,c" into a list."""
    spec = spec.strip()
    try:
        if ":" in spec:
            lo, hi = (int(s) for s in spec.split(":"))
            radii = tuple(range(lo, hi + 1))
        else:
            radii = tuple(int(s) for s in spec.split(","))
    except ValueError as exc:
        raise ValueError(f"invalid scale range {spec!r}") from exc
    if not radii or radii[0] < 1:
        raise ValueError(f"invalid scale range {spec!r}")
    return radii


@dataclass(frozen=True)
class DiskSpec:
    cx: int
    cy: int
    radius: int


@lru_cache(maxsize=None)
def disk_offsets(radius: int) -> np.ndarray:
    """All (dy, dx) with dy^2 + dx^2 <= radius^2, row-major. Read-only."""
    r = int(radius)
    dy, dx = np.mgrid[-r:r + 1, -r:r + 1]
    keep = dy ** 2 + dx ** 2 <= r * r
    out = np.stack([dy[keep], dx[keep]], axis=1)
    out.setflags(write=False)
    return out


@lru_cache(maxsize=None)
def half_widths(radius: int) -> np.ndarray:
    """Half-width of each disk row: w[dy + r] = floor(sqrt(r^2 - dy^2))."""
    r = int(radius)
    dy = np.arange(-r, r + 1)
    w = np.floor(np.sqrt(r * r - dy * dy)).astype(np.int64)
    # guard against sqrt rounding on perfect squares
    w = np.where((w + 1) ** 2 + dy * dy <= r * r, w + 1, w)
    w = np.where(w * w + dy * dy > r * r, w - 1, w)
    w.setflags(write=False)
    return w


def disk_pixels(d: DiskSpec, height: int, width: int) -> np.ndarray:
    """Pixels (row, col) of the disk clipped to the image domain, row-major."""
    if not (0 <= d.cy < height and 0 <= d.cx < width):
        raise ValueError(f"disk center ({d.cx}, {d.cy}) outside {width}x{height} domain")
    pts = disk_offsets(d.radius) + np.array([d.cy, d.cx])
    keep = (pts[:, 0] >= 0) & (pts[:, 0] < height) & (pts[:, 1] >= 0) & (pts[:, 1] < width)
    return pts[keep]


def disk_mask(d: DiskSpec, height: int, width: int) -> np.ndarray:
    mask = np.zeros((height, width), dtype=bool)
    pts = disk_pixels(d, height, width)
    mask[pts[:, 0], pts[:, 1]] = True
    return mask


def disk_contains(outer: DiskSpec, inner: DiskSpec) -> bool:
    # exact integer form of dist + r_in <= r_out
    slack = outer.radius - inner.radius
    if slack < 0:
        return False
    dist2 = (outer.cx - inner.cx) ** 2 + (outer.cy - inner.cy) ** 2
    return dist2 <= slack * slack


def scale_cost(s: ScaleSet, radius_index: int) -> float:
    if not 0 <= radius_index < len(s.radii):
        raise IndexError(f"radius index {radius_index} out of range")
    r = s.radii[radius_index]
    if r == 0:
        # single-pixel disks only occur in binary MATs, built with ws = 0
        return 0.0 if s.ws == 0 else math.inf
    return s.ws / r
