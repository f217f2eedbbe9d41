"""Image container, sRGB <-> CIELAB conversion, L0 smoothing and raster I/O."""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np
from PIL import Image as PILImage, UnidentifiedImageError
from scipy import fft

RGB = "RGB"
LAB = "LAB"

SUPPORTED_FORMATS = ("PNG", "PPM")

# D65 reference white, 2 degree observer
_WHITE_D65 = np.array([0.95047, 1.0, 1.08883])

_RGB_TO_XYZ = np.array([
    [0.4124564, 0.3575761, 0.1804375],
    [0.2126729, 0.7151522, 0.0721750],
    [0.0193339, 0.1191920, 0.9503041],
])
_XYZ_TO_RGB = np.linalg.inv(_RGB_TO_XYZ)

# affine rescaling of (L*, a*, b*) into [0, 1]
_LAB_OFFSET = np.array([0.0, 128.0, 128.0])
_LAB_RANGE = np.array([100.0, 255.0, 255.0])


class ImageIOError(ValueError):
    """Raised when an image file cannot be read or written."""


@dataclass(frozen=True)
class Image:
    """Dense H x W x C raster with values in [0, 1] and a color-space tag."""

    data: np.ndarray
    space: str = RGB

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim == 2:
            data = data[:, :, None]
        if data.ndim != 3 or data.shape[2] not in (1, 3):
            raise ValueError(f"expected HxWx1 or HxWx3 data, got shape {data.shape}")
        if data.shape[0] == 0 or data.shape[1] == 0:
            raise ValueError("zero-size image")
        if self.space not in (RGB, LAB):
            raise ValueError(f"unknown color space {self.space!r}")
        if not np.all(np.isfinite(data)):
            raise ValueError("image contains non-finite values")
        object.__setattr__(self, "data", data)

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.data.shape


@dataclass(frozen=True)
class SmoothingParams:
    lam: float = 2e-4
    kappa: float = 2.0
    max_iters: int = 100
    beta_max: float = 1e5

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError("smoothing lambda must be positive")
        if not self.kappa > 1:
            raise ValueError("smoothing kappa must be > 1")


def load_image(path) -> Image:
    """Read a PNG or PPM file as an RGB image scaled to [0, 1]."""
    if not os.path.isfile(path):
        raise ImageIOError(f"unreadable: {path} does not exist")
    try:
        with PILImage.open(path) as pil:
            fmt = pil.format
            if fmt not in SUPPORTED_FORMATS:
                raise ImageIOError(f"unsupported format {fmt!r} in {path}")
            pil.load()
            arr = _pil_to_array(pil.convert("RGB") if pil.mode not in ("I", "I;16") else pil)
    except ImageIOError:
        raise
    except (UnidentifiedImageError, OSError, SyntaxError, ValueError) as exc:
        raise ImageIOError(f"unreadable: {path} ({exc})") from exc
    if arr.size == 0:
        raise ImageIOError(f"unreadable: {path} is a zero-size image")
    if arr.ndim == 2:
        arr = np.repeat(arr[:, :, None], 3, axis=2)
    return Image(arr, RGB)


def _pil_to_array(pil) -> np.ndarray:
    arr = np.asarray(pil)
    if arr.dtype == np.uint8:
        return arr.astype(np.float64) / 255.0
    # 16-bit grayscale
    return arr.astype(np.float64) / 65535.0


def load_raw(path) -> np.ndarray:
    """Read a PNG/PPM without value scaling (for masks and label maps)."""
    if not os.path.isfile(path):
        raise ImageIOError(f"unreadable: {path} does not exist")
    try:
        with PILImage.open(path) as pil:
            if pil.format not in SUPPORTED_FORMATS:
                raise ImageIOError(f"unsupported format {pil.format!r} in {path}")
            pil.load()
            if pil.mode in ("P", "LA", "RGBA"):
                pil = pil.convert("RGB")
            arr = np.array(pil)
    except ImageIOError:
        raise
    except (UnidentifiedImageError, OSError, SyntaxError, ValueError) as exc:
        raise ImageIOError(f"unreadable: {path} ({exc})") from exc
    if arr.size == 0:
        raise ImageIOError(f"unreadable: {path} is a zero-size image")
    return arr


def to_uint8(data: np.ndarray) -> np.ndarray:
    return np.clip(np.rint(np.asarray(data) * 255.0), 0, 255).astype(np.uint8)


def save_image(img: Image | np.ndarray, path) -> None:
    """Write an RGB (or single-channel) image as 8-bit PNG or binary PPM."""
    data = img.data if isinstance(img, Image) else np.asarray(img, dtype=np.float64)
    if isinstance(img, Image) and img.space != RGB:
        raise ValueError("convert to RGB before saving")
    if data.ndim == 3 and data.shape[2] == 1:
        data = data[:, :, 0]
    ext = os.path.splitext(str(path))[1].lower()
    fmt = {".png": "PNG", ".ppm": "PPM", ".pgm": "PPM", ".pnm": "PPM"}.get(ext)
    if fmt is None:
        raise ImageIOError(f"unsupported output extension {ext!r}")
    try:
        PILImage.fromarray(to_uint8(data)).save(path, format=fmt)
    except OSError as exc:
        raise ImageIOError(f"cannot write {path}: {exc}") from exc


def _srgb_to_linear(c):
    return np.where(c <= 0.04045, c / 12.92, ((c + 0.055) / 1.055) ** 2.4)


def _linear_to_srgb(c):
    c = np.clip(c, 0.0, None)
    return np.where(c <= 0.0031308, 12.92 * c, 1.055 * c ** (1 / 2.4) - 0.055)


def _lab_f(t):
    delta = 6.0 / 29.0
    return np.where(t > delta ** 3, np.cbrt(t), t / (3 * delta ** 2) + 4.0 / 29.0)


def _lab_finv(t):
    delta = 6.0 / 29.0
    return np.where(t > delta, t ** 3, 3 * delta ** 2 * (t - 4.0 / 29.0))


def srgb_to_lab_values(rgb: np.ndarray) -> np.ndarray:
    """Unnormalized (L*, a*, b*) for sRGB values in [0, 1], last axis = 3."""
    xyz = _srgb_to_linear(np.asarray(rgb, dtype=np.float64)) @ _RGB_TO_XYZ.T
    f = _lab_f(xyz / _WHITE_D65)
    L = 116.0 * f[..., 1] - 16.0
    a = 500.0 * (f[..., 0] - f[..., 1])
    b = 200.0 * (f[..., 1] - f[..., 2])
    return np.stack([L, a, b], axis=-1)


def lab_values_to_srgb(lab: np.ndarray) -> np.ndarray:
    lab = np.asarray(lab, dtype=np.float64)
    fy = (lab[..., 0] + 16.0) / 116.0
    fx = fy + lab[..., 1] / 500.0
    fz = fy - lab[..., 2] / 200.0
    xyz = _lab_finv(np.stack([fx, fy, fz], axis=-1)) * _WHITE_D65
    return np.clip(_linear_to_srgb(xyz @ _XYZ_TO_RGB.T), 0.0, 1.0)


def normalize_lab(lab: np.ndarray) -> np.ndarray:
    return np.clip((lab + _LAB_OFFSET) / _LAB_RANGE, 0.0, 1.0)


def denormalize_lab(lab01: np.ndarray) -> np.ndarray:
    return np.asarray(lab01) * _LAB_RANGE - _LAB_OFFSET


def rgb_to_lab(img: Image) -> Image:
    """Convert to CIELAB (D65) with each channel rescaled into [0, 1]."""
    if img.space != RGB:
        raise ValueError("image is already in LAB")
    data = img.data
    if data.shape[2] == 1:
        data = np.repeat(data, 3, axis=2)
    return Image(normalize_lab(srgb_to_lab_values(data)), LAB)


def lab_to_rgb(img: Image) -> Image:
    if img.space != LAB:
        raise ValueError("image is not in LAB")
    return Image(lab_values_to_srgb(denormalize_lab(img.data)), RGB)


def smooth(img: Image, params: SmoothingParams | None = None) -> Image:
    """Edge-preserving smoothing by L0 gradient minimization.

    Half-quadratic splitting: each round zeroes the auxiliary gradient field
    wherever its squared magnitude (summed over channels) falls below
    lam / beta, then solves the quadratic subproblem for the image in the
    Fourier domain with periodic boundaries. beta grows by `kappa` per round
    starting from 2 * lam until it exceeds `beta_max`.
    """
    params = params or SmoothingParams()
    if img.space != RGB:
        raise ValueError("smooth expects an RGB image")
    src = img.data
    h, w, _ = src.shape

    # |F(forward difference)|^2 along each axis
    wx = 2.0 - 2.0 * np.cos(2.0 * np.pi * np.arange(w) / w)
    wy = 2.0 - 2.0 * np.cos(2.0 * np.pi * np.arange(h) / h)
    grad_energy = (wy[:, None] + wx[None, :])[:, :, None]
    src_hat = fft.fft2(src, axes=(0, 1))

    out = src.copy()
    beta = 2.0 * params.lam
    for _ in range(params.max_iters):
        if beta >= params.beta_max:
            break
        gx = np.roll(out, -1, axis=1) - out
        gy = np.roll(out, -1, axis=0) - out
        small = (gx ** 2 + gy ** 2).sum(axis=2) < params.lam / beta
        gx[small] = 0.0
        gy[small] = 0.0
        # adjoint of the forward differences
        div = (np.roll(gx, 1, axis=1) - gx) + (np.roll(gy, 1, axis=0) - gy)
        num = src_hat + beta * fft.fft2(div, axes=(0, 1))
        out = np.real(fft.ifft2(num / (1.0 + beta * grad_energy), axes=(0, 1)))
        beta *= params.kappa
    return Image(np.clip(out, 0.0, 1.0), RGB)
