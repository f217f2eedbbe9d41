"""End-to-end AMAT computation: smooth, convert, cover, group, simplify."""

from __future__ import annotations

from dataclasses import dataclass

from .diskgeom import ScaleSet
from .encoding import compute_cost_volume
from .imagecore import LAB, RGB, Image, SmoothingParams, rgb_to_lab, smooth
from .postprocess import DEFAULT_TAU, BranchLabeling, group_branches, simplify_branches
from .setcover import OVERLAP, MatResult, greedy_cover


@dataclass(frozen=True)
class PipelineResult:
    mat: MatResult
    greedy: MatResult
    branches: BranchLabeling | None
    lab: Image


def compute_amat(img: Image, scales: ScaleSet | None = None, smoothing: bool = True,
                 simplify: bool = True, tau: float = DEFAULT_TAU,
                 smoothing_params: SmoothingParams | None = None,
                 discount: str = OVERLAP) -> PipelineResult:
    """Run the full pipeline on an RGB (or grayscale) image.

    Smoothing happens in RGB before the LAB conversion. With `simplify` off
    the greedy cover is returned unchanged.
    """
    if img.space == LAB:
        raise ValueError("compute_amat expects an RGB image")
    scales = scales or ScaleSet()
    if img.channels == 1:
        img = Image(img.data.repeat(3, axis=2), RGB)
    if smoothing:
        img = smooth(img, smoothing_params)
    lab = rgb_to_lab(img)
    vol = compute_cost_volume(lab, scales)
    greedy = greedy_cover(vol, scales, discount)
    if not simplify:
        return PipelineResult(mat=greedy, greedy=greedy, branches=None, lab=lab)
    branches = group_branches(greedy, tau)
    mat = simplify_branches(greedy, branches, lab)
    return PipelineResult(mat=mat, greedy=greedy, branches=branches, lab=lab)
