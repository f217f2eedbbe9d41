"""Medial point detection scores and reconstruction quality metrics."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy import ndimage as ndi
from scipy.spatial import cKDTree

from .imagecore import RGB, Image

PSNR_CEILING = 100.0
SSIM_SIGMA = 1.5
SSIM_RADIUS = 5  # 11x11 window
SSIM_C1 = 0.01 ** 2
SSIM_C2 = 0.03 ** 2
LUMA = np.array([0.299, 0.587, 0.114])


@dataclass(frozen=True)
class DetectionScore:
    precision: float
    recall: float
    f_measure: float
    matched: int
    detected: int
    ground_truth: int


@dataclass(frozen=True)
class ReconScore:
    mse: float
    psnr: float
    ssim: float
    compression: float = float("nan")

    def as_dict(self):
        return asdict(self)


def f_measure(p: float, r: float) -> float:
    return 2 * p * r / (p + r) if p + r > 0 else 0.0


def _match(pred: np.ndarray, gt: np.ndarray, tol: float) -> int:
    """Greedy one-to-one matching, nearest pairs first.

    Ties on distance are broken by the (smaller, larger) pair of pixel
    coordinates, which keeps the count symmetric in its two arguments.
    """
    if len(pred) == 0 or len(gt) == 0:
        return 0
    pairs = cKDTree(pred).sparse_distance_matrix(cKDTree(gt), tol, output_type="ndarray")
    if len(pairs) == 0:
        return 0
    i, j, dist = pairs["i"], pairs["j"], pairs["v"]
    pa = pred[i]
    pb = gt[j]
    a_first = (pa[:, 0] < pb[:, 0]) | ((pa[:, 0] == pb[:, 0]) & (pa[:, 1] <= pb[:, 1]))
    lo = np.where(a_first[:, None], pa, pb)
    hi = np.where(a_first[:, None], pb, pa)
    order = np.lexsort((hi[:, 1], hi[:, 0], lo[:, 1], lo[:, 0], dist))
    used_a = np.zeros(len(pred), dtype=bool)
    used_b = np.zeros(len(gt), dtype=bool)
    matched = 0
    for k in order:
        a, b = i[k], j[k]
        if used_a[a] or used_b[b]:
            continue
        used_a[a] = used_b[b] = True
        matched += 1
    return matched


def detection_score(predicted, gt_maps, diag_fraction: float = 0.01) -> DetectionScore:
    """Precision against the union of annotations, recall averaged per map.

    A prediction matches a ground-truth positive within
    diag_fraction * sqrt(H^2 + W^2) pixels. Empty predictions score P = 0
    unless every annotation is empty too; empty annotation maps count as
    fully recalled.
    """
    predicted = np.asarray(predicted, dtype=bool)
    if isinstance(gt_maps, np.ndarray) and gt_maps.ndim == 2:
        gt_maps = [gt_maps]
    gt_maps = [np.asarray(g, dtype=bool) for g in gt_maps]
    if not gt_maps:
        raise ValueError("no ground-truth maps")
    for g in gt_maps:
        if g.shape != predicted.shape:
            raise ValueError(f"dimension mismatch: {g.shape} vs {predicted.shape}")
    h, w = predicted.shape
    tol = diag_fraction * math.hypot(h, w)

    pred_pts = np.argwhere(predicted)
    union = np.logical_or.reduce(gt_maps)
    union_pts = np.argwhere(union)
    matched = _match(pred_pts, union_pts, tol)
    detected = len(pred_pts)
    if detected:
        precision = matched / detected
    else:
        precision = 1.0 if not len(union_pts) else 0.0

    recalls = []
    for g in gt_maps:
        pts = np.argwhere(g)
        recalls.append(_match(pred_pts, pts, tol) / len(pts) if len(pts) else 1.0)
    recall = float(np.mean(recalls))
    return DetectionScore(precision=float(precision), recall=recall,
                          f_measure=f_measure(precision, recall), matched=matched,
                          detected=detected, ground_truth=len(union_pts))


def mask_fmeasure(pred, target, band: int = 1) -> float:
    """Pixel F-measure where predictions within `band` pixels of target count."""
    pred = np.asarray(pred, dtype=bool)
    target = np.asarray(target, dtype=bool)
    if band > 0:
        grow = np.ones((2 * band + 1, 2 * band + 1), dtype=bool)
        near_target = ndi.binary_dilation(target, grow)
        near_pred = ndi.binary_dilation(pred, grow)
    else:
        near_target, near_pred = target, pred
    p = (pred & near_target).sum() / pred.sum() if pred.any() else float(not target.any())
    r = (target & near_pred).sum() / target.sum() if target.any() else 1.0
    return f_measure(float(p), float(r))


def _gaussian_window() -> np.ndarray:
    ax = np.arange(-SSIM_RADIUS, SSIM_RADIUS + 1)
    g = np.exp(-(ax ** 2) / (2 * SSIM_SIGMA ** 2))
    return g / g.sum()


def _blur(a: np.ndarray) -> np.ndarray:
    g = _gaussian_window()
    out = ndi.correlate1d(a, g, axis=0, mode="reflect")
    return ndi.correlate1d(out, g, axis=1, mode="reflect")


def grayscale(data: np.ndarray) -> np.ndarray:
    data = np.asarray(data, dtype=np.float64)
    if data.ndim == 2:
        return data
    if data.shape[2] == 1:
        return data[:, :, 0]
    return data @ LUMA


def ssim(a: np.ndarray, b: np.ndarray) -> float:
    """Mean SSIM over all pixel positions of two grayscale images in [0, 1].

    11x11 Gaussian window (sigma 1.5), borders handled by symmetric
    reflection, C1 = 0.01^2 and C2 = 0.03^2 for a unit dynamic range.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    mu_a = _blur(a)
    mu_b = _blur(b)
    var_a = _blur(a * a) - mu_a ** 2
    var_b = _blur(b * b) - mu_b ** 2
    cov = _blur(a * b) - mu_a * mu_b
    num = (2 * mu_a * mu_b + SSIM_C1) * (2 * cov + SSIM_C2)
    den = (mu_a ** 2 + mu_b ** 2 + SSIM_C1) * (var_a + var_b + SSIM_C2)
    return float(np.mean(num / den))


def mse(a, b) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return float(np.mean((a - b) ** 2))


def psnr_from_mse(err: float) -> float:
    if err <= 0:
        return PSNR_CEILING
    return min(PSNR_CEILING, -10.0 * math.log10(err))


def recon_score(original: Image, reconstructed: Image, compression: float = float("nan")) -> ReconScore:
    for img in (original, reconstructed):
        if img.space != RGB:
            raise ValueError("recon_score expects RGB images")
    if original.shape != reconstructed.shape:
        raise ValueError(f"dimension mismatch: {original.shape} vs {reconstructed.shape}")
    err = mse(original.data, reconstructed.data)
    if err == 0.0:
        quality = 1.0
    else:
        quality = ssim(grayscale(original.data), grayscale(reconstructed.data))
    return ReconScore(mse=err, psnr=psnr_from_mse(err), ssim=quality, compression=compression)


def format_scores(rows) -> str:
    """Render (name, value) pairs as tab-separated lines."""
    return "".join(f"{name}\t{_fmt(value)}\n" for name, value in rows)


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value) if math.isfinite(value) else str(value)
    return str(value)


def parse_scores(text: str) -> dict[str, float]:
    out = {}
    for line in text.splitlines():
        if not line.strip():
            continue
        name, value = line.split("\t")
        out[name] = float(value)
    return out
