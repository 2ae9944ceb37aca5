"""Simulated machine-oriented codec: blur, chroma attenuation, quantization.

This is a stand-in with the right character (edges and layout survive, texture
and colour saturation do not), not a model of any learned codec. The first two
stages form a linear map ``A`` used by reconstruction guidance; quantization
and the final clamp are excluded from ``A``.
"""
import math
from dataclasses import asdict, dataclass

import numpy as np

from . import kernels
from .colorimetry import LUMA_WEIGHTS, luma
from .errors import ConfigError


@dataclass(frozen=True)
class DegradationConfig:
    blur_sigma: float = 1.0
    chroma_gain: float = 0.5
    quant_levels: int = 16

    def __post_init__(self):
        for name in ("blur_sigma", "chroma_gain"):
            if not math.isfinite(getattr(self, name)):
                raise ConfigError(name, "must be finite")
        if self.blur_sigma < 0:
            raise ConfigError("blur_sigma", f"must be >= 0, got {self.blur_sigma}")
        if not 0.0 <= self.chroma_gain <= 1.0:
            raise ConfigError("chroma_gain", f"must be in [0, 1], got {self.chroma_gain}")
        if int(self.quant_levels) != self.quant_levels or self.quant_levels < 0 or self.quant_levels == 1:
            raise ConfigError("quant_levels", f"must be 0 (off) or an integer >= 2, got {self.quant_levels}")

    @classmethod
    def identity(cls):
        return cls(blur_sigma=0.0, chroma_gain=1.0, quant_levels=0)

    @classmethod
    def from_dict(cls, d):
        d = dict(d or {})
        unknown = set(d) - {"blur_sigma", "chroma_gain", "quant_levels"}
        if unknown:
            raise ConfigError("degradation", f"unknown keys {sorted(unknown)}")
        return cls(**d)

    def to_dict(self):
        return asdict(self)


def blur_kernel(sigma):
    """Normalized 1-D Gaussian taps, radius ``ceil(3 * sigma)``."""
    if sigma == 0:
        return np.ones(1)
    r = math.ceil(3.0 * sigma)
    t = np.arange(-r, r + 1, dtype=np.float64)
    with np.errstate(over="ignore"):
        z = t / sigma
        k = np.exp(-0.5 * z * z)
    return k / k.sum()


def blur(x, sigma):
    if sigma == 0:
        return np.array(x, dtype=np.float64)
    return kernels.separable_blur(np.ascontiguousarray(x, dtype=np.float64), blur_kernel(sigma))


def attenuate_chroma(x, gain):
    """Scale Cb/Cr deviations from neutral by ``gain`` keeping Y fixed.

    In RGB this is ``gain * x + (1 - gain) * Y``, a linear map with no offset.
    """
    if gain == 1.0:
        return np.array(x, dtype=np.float64)
    y = luma(x)[..., None]
    return gain * x + (1.0 - gain) * y


def attenuate_chroma_adjoint(x, gain):
    # transpose of gain*I + (1-gain) * 1 w^T  is  gain*I + (1-gain) * w 1^T
    if gain == 1.0:
        return np.array(x, dtype=np.float64)
    s = np.sum(x, axis=-1, keepdims=True)
    return gain * x + (1.0 - gain) * s * LUMA_WEIGHTS


def quantize(x, levels):
    if levels == 0:
        return x
    q = levels - 1
    return np.floor(np.clip(x, 0.0, 1.0) * q + 0.5) / q


def degrade_linear(x, cfg):
    """The linear part ``A``: blur then chroma attenuation."""
    return attenuate_chroma(blur(x, cfg.blur_sigma), cfg.chroma_gain)


def degrade_adjoint(y, cfg):
    """``A^T``. Half-sample reflection keeps the blur matrix symmetric."""
    return blur(attenuate_chroma_adjoint(np.asarray(y, dtype=np.float64), cfg.chroma_gain),
                cfg.blur_sigma)


def degrade(x, cfg):
    out = quantize(degrade_linear(x, cfg), cfg.quant_levels)
    return np.clip(out, 0.0, 1.0)
