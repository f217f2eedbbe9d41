"""Image reconstruction from medial records and ground-truth baselines."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .diskgeom import DiskSpec, ScaleSet
from .encoding import encode
from .imagecore import LAB, RGB, Image, lab_to_rgb, rgb_to_lab
from .setcover import MatResult, MedialRecord, depth_from_records, radius_map_from_records, _stamp

RECORD_VALUES = 6  # x, y, r and three encoding channels


class CoverageError(RuntimeError):
    """Raised when a reconstruction leaves pixels without any covering disk."""


@dataclass(frozen=True)
class Reconstruction:
    image: Image
    depth_used: np.ndarray
    record_count: int

    @property
    def compression(self) -> float:
        return compression_ratio(self.image.height, self.image.width, self.record_count)


def compression_ratio(height: int, width: int, record_count: int, channels: int = 3) -> float:
    """Stored input values over stored record values: H*W*3 / (m*6)."""
    if record_count <= 0:
        return float("inf")
    return height * width * channels / (record_count * RECORD_VALUES)


def accumulate(records, height: int, width: int, channels: int = 3):
    """Per-pixel sum of covering encodings and covering-disk count."""
    total = np.zeros((height, width, channels))
    depth = np.zeros((height, width), dtype=np.int64)
    for rec in records:
        _stamp(total, rec.cy, rec.cx, rec.radius, np.asarray(rec.encoding))
        _stamp(depth, rec.cy, rec.cx, rec.radius, 1)
    return total, depth


def invert(mat: MatResult, background: float | None = None) -> Reconstruction:
    """Average the encodings of all disks covering each pixel.

    The mean is taken in the space of the encodings; LAB results are then
    converted to RGB. Uncovered pixels are an error unless a `background`
    value is given (binary medial axes do not cover the background).
    """
    channels = len(mat.records[0].encoding) if mat.records else 3
    total, depth = accumulate(mat.records, mat.height, mat.width, channels)
    holes = depth == 0
    if holes.any() and background is None:
        raise CoverageError(f"{int(holes.sum())} pixels are not covered by any disk")
    values = total / np.maximum(depth, 1)[:, :, None]
    if mat.space == LAB:
        if holes.any():
            values[holes] = background
        img = lab_to_rgb(Image(np.clip(values, 0.0, 1.0), LAB))
    else:
        values[holes] = background if background is not None else 0.0
        img = Image(np.clip(values, 0.0, 1.0), RGB)
    return Reconstruction(image=img, depth_used=depth, record_count=len(mat.records))


def _check_labels(img: Image, labels: np.ndarray) -> np.ndarray:
    labels = np.asarray(labels)
    if labels.shape != (img.height, img.width):
        raise ValueError(f"label map shape {labels.shape} does not match image {img.height}x{img.width}")
    if np.issubdtype(labels.dtype, np.floating) and np.isnan(labels).any():
        raise ValueError("unlabeled pixels in segmentation")
    if (labels < 0).any():
        raise ValueError("unlabeled pixels in segmentation (negative label)")
    return labels


def gtseg_baseline(img: Image, segmentation) -> Reconstruction:
    """Replace every region by its mean RGB color."""
    if img.space != RGB:
        raise ValueError("gtseg_baseline expects an RGB image")
    labels = _check_labels(img, segmentation)
    _, inverse = np.unique(labels, return_inverse=True)
    inverse = inverse.reshape(-1)
    flat = img.data.reshape(-1, img.channels)
    n_regions = inverse.max() + 1
    counts = np.bincount(inverse, minlength=n_regions)
    means = np.stack([np.bincount(inverse, weights=flat[:, c], minlength=n_regions)
                      for c in range(img.channels)], axis=1) / counts[:, None]
    out = means[inverse].reshape(img.shape)
    return Reconstruction(image=Image(out, RGB), depth_used=np.ones(labels.shape, dtype=np.int64),
                          record_count=int(n_regions))


def gtskel_mat(img: Image, segmentation) -> MatResult:
    """Medial records of every region's binary MAT, encoded from the image.

    Radii are strict, so no disk reaches into a neighboring region.
    """
    from .postprocess import binary_mat

    labels = _check_labels(img, segmentation)
    lab = rgb_to_lab(img) if img.space == RGB else img
    records = []
    for value in np.unique(labels):
        shape = binary_mat(labels == value, strict=True)
        ys, xs = np.nonzero(shape.axis)
        for y, x in zip(ys, xs):
            r = int(shape.radii[y, x])
            enc = tuple(float(v) for v in encode(lab, DiskSpec(int(x), int(y), r)))
            records.append(MedialRecord(int(x), int(y), r, enc))
    h, w = labels.shape
    radii = sorted({r.radius for r in records})
    return MatResult(records=records, depth=depth_from_records(records, h, w),
                     radius_map=radius_map_from_records(records, h, w),
                     scales=ScaleSet(tuple(radii), 0.0), height=h, width=w, space=LAB)


def gtskel_baseline(img: Image, segmentation) -> Reconstruction:
    """Reconstruct from ground-truth segment skeletons and their radii."""
    return invert(gtskel_mat(img, segmentation))
