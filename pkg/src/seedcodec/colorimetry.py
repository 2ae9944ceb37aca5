"""Colour transforms, the colour-controller merge, and image quality metrics.

Images are ``(H, W, 3)`` float64 RGB arrays in ``[0, 1]``. YCbCr uses BT.601
full range with the two-decimal chroma constants below; ``ycbcr_to_rgb`` is the
exact algebraic inverse of ``rgb_to_ycbcr`` for these constants.
"""
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import ConfigError, DimensionError

KR, KG, KB = 0.299, 0.587, 0.114
CB_SCALE = 0.564
CR_SCALE = 0.713
LUMA_WEIGHTS = np.array([KR, KG, KB])

PSNR_CAP_DB = 100.0
SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03


@dataclass(frozen=True)
class YCbCrImage:
    Y: np.ndarray
    Cb: np.ndarray
    Cr: np.ndarray

    def __post_init__(self):
        if not (self.Y.shape == self.Cb.shape == self.Cr.shape):
            raise DimensionError(
                f"YCbCr planes differ: {self.Y.shape}, {self.Cb.shape}, {self.Cr.shape}")


@dataclass(frozen=True)
class MetricReport:
    psnr_db: float
    y_psnr_db: float
    ssim: float
    lpips: None = None  # needs a pretrained network; never computed

    def to_dict(self):
        return {
            "psnr_db": self.psnr_db,
            "y_psnr_db": self.y_psnr_db,
            "ssim": self.ssim,
            "lpips": "not computed",
        }


def _check_same(a, b):
    if a.shape != b.shape:
        raise DimensionError(f"geometry mismatch: {a.shape} vs {b.shape}")


def luma(x):
    """Y plane of an RGB image."""
    x = np.asarray(x, dtype=np.float64)
    return KR * x[..., 0] + KG * x[..., 1] + KB * x[..., 2]


def rgb_to_ycbcr(x):
    x = np.asarray(x, dtype=np.float64)
    y = luma(x)
    cb = CB_SCALE * (x[..., 2] - y) + 0.5
    cr = CR_SCALE * (x[..., 0] - y) + 0.5
    return YCbCrImage(y, cb, cr)


def ycbcr_to_rgb_unclamped(img):
    r = img.Y + (img.Cr - 0.5) / CR_SCALE
    b = img.Y + (img.Cb - 0.5) / CB_SCALE
    g = (img.Y - KR * r - KB * b) / KG
    return np.stack([r, g, b], axis=-1)


def ycbcr_to_rgb(img):
    return np.clip(ycbcr_to_rgb_unclamped(img), 0.0, 1.0)


def cc_merge(generated, machine, clamp=True):
    """Keep the luminance of ``generated`` and take chroma from ``machine``.

    With ``clamp=False`` the raw inverse transform is returned, which is what the
    plane-exactness checks look at.
    """
    generated = np.asarray(generated, dtype=np.float64)
    machine = np.asarray(machine, dtype=np.float64)
    _check_same(generated, machine)
    g = rgb_to_ycbcr(generated)
    m = rgb_to_ycbcr(machine)
    merged = YCbCrImage(g.Y, m.Cb, m.Cr)
    return ycbcr_to_rgb(merged) if clamp else ycbcr_to_rgb_unclamped(merged)


def mse(a, b, on_y_channel=False):
    a = np.clip(np.asarray(a, dtype=np.float64), 0.0, 1.0)
    b = np.clip(np.asarray(b, dtype=np.float64), 0.0, 1.0)
    _check_same(a, b)
    if on_y_channel:
        a, b = luma(a), luma(b)
    d = a - b
    return float(np.mean(d * d))


def psnr(a, b, on_y_channel=False):
    """PSNR in dB with peak 1.0, capped at 100 dB (identical inputs give the cap)."""
    err = mse(a, b, on_y_channel)
    if err == 0.0:
        return PSNR_CAP_DB
    return float(min(PSNR_CAP_DB, -10.0 * np.log10(err)))


def y_psnr(a, b):
    return psnr(a, b, on_y_channel=True)


def gaussian_window(size=SSIM_WINDOW, sigma=SSIM_SIGMA):
    r = (size - 1) / 2.0
    t = np.arange(size) - r
    w = np.exp(-(t * t) / (2.0 * sigma * sigma))
    return w / w.sum()


def ssim(a, b):
    """Single-scale SSIM on the Y plane, mean over valid 11x11 window positions."""
    a = np.clip(np.asarray(a, dtype=np.float64), 0.0, 1.0)
    b = np.clip(np.asarray(b, dtype=np.float64), 0.0, 1.0)
    _check_same(a, b)
    if a.shape[0] < SSIM_WINDOW or a.shape[1] < SSIM_WINDOW:
        raise ConfigError("image", f"SSIM needs at least {SSIM_WINDOW}x{SSIM_WINDOW}, got {a.shape[:2]}")
    ya = np.ascontiguousarray(luma(a))
    yb = np.ascontiguousarray(luma(b))
    win = gaussian_window()
    c1 = SSIM_K1 ** 2
    c2 = SSIM_K2 ** 2
    mu_a = kernels.filter_valid(ya, win)
    mu_b = kernels.filter_valid(yb, win)
    var_a = kernels.filter_valid(ya * ya, win) - mu_a * mu_a
    var_b = kernels.filter_valid(yb * yb, win) - mu_b * mu_b
    cov = kernels.filter_valid(ya * yb, win) - mu_a * mu_b
    num = (2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)
    den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2)
    return float(np.mean(num / den))


def metric_report(a, b):
    return MetricReport(psnr(a, b), y_psnr(a, b), ssim(a, b))
