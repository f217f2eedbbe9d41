"""Appearance medial axis transform for color images."""

from .diskgeom import DiskSpec, ScaleSet, parse_scales
from .encoding import CostVolume, compute_cost_volume, decode, encode
from .evaluate import DetectionScore, ReconScore, detection_score, recon_score
from .imagecore import Image, SmoothingParams, lab_to_rgb, load_image, rgb_to_lab, save_image, smooth
from .matfile import read_mat, write_mat
from .pipeline import PipelineResult, compute_amat
from .postprocess import BinaryShapeMat, BranchLabeling, binary_mat, group_branches, simplify_branches
from .reconstruct import Reconstruction, compression_ratio, gtseg_baseline, gtskel_baseline, invert
from .setcover import MatResult, MedialRecord, greedy_cover

__all__ = [
    "BinaryShapeMat", "BranchLabeling", "CostVolume", "DetectionScore", "DiskSpec", "Image",
    "MatResult", "MedialRecord", "PipelineResult", "ReconScore", "Reconstruction", "ScaleSet",
    "SmoothingParams", "binary_mat", "compression_ratio", "compute_amat", "compute_cost_volume",
    "decode", "detection_score", "encode", "greedy_cover", "group_branches", "gtseg_baseline",
    "gtskel_baseline", "invert", "lab_to_rgb", "load_image", "parse_scales", "read_mat",
    "recon_score", "rgb_to_lab", "save_image", "simplify_branches", "smooth", "write_mat",
]
