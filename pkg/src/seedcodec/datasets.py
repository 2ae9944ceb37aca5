"""Deterministic synthetic image families and directory-backed datasets.

Evaluation images and the denoiser's reference set are drawn from independent
child streams of one master seed, so an evaluation image never appears in the
reference set.
"""
from pathlib import Path

import numpy as np

from .diffusion import DenoiserSpec
from .errors import ConfigError
from .imageio import load_image

MIN_SIDE = 11
PATTERNS = ("shapes", "stripes")


def _gradient(rng, h, w):
    yy, xx = np.mgrid[0:h, 0:w]
    theta = rng.uniform(0, 2 * np.pi)
    u = (np.cos(theta) * (xx / max(w - 1, 1) - 0.5) + np.sin(theta) * (yy / max(h - 1, 1) - 0.5)) + 0.5
    u = np.clip(u, 0.0, 1.0)[..., None]
    c0, c1 = rng.uniform(0, 1, 3), rng.uniform(0, 1, 3)
    return (1 - u) * c0 + u * c1


def _shapes(rng, h, w):
    img = _gradient(rng, h, w)
    yy, xx = np.mgrid[0:h, 0:w]
    for _ in range(rng.integers(1, 4)):
        colour = rng.uniform(0, 1, 3)
        if rng.random() < 0.5:
            cy, cx = rng.uniform(0, h), rng.uniform(0, w)
            r = rng.uniform(0.12, 0.35) * min(h, w)
            mask = (yy - cy) ** 2 + (xx - cx) ** 2 <= r * r
        else:
            y0, x0 = rng.integers(0, h - 2), rng.integers(0, w - 2)
            y1 = rng.integers(y0 + 2, h + 1)
            x1 = rng.integers(x0 + 2, w + 1)
            mask = (yy >= y0) & (yy < y1) & (xx >= x0) & (xx < x1)
        img[mask] = colour
    return img


def _stripes(rng, h, w):
    img = _gradient(rng, h, w)
    yy, xx = np.mgrid[0:h, 0:w]
    theta = rng.uniform(0, np.pi)
    period = rng.uniform(4, max(5.0, min(h, w) / 2))
    phase = np.cos(theta) * xx + np.sin(theta) * yy
    mask = (np.floor(phase / (period / 2)) % 2) == 0
    img[mask] = rng.uniform(0, 1, 3)
    return img


_MAKERS = {"shapes": _shapes, "stripes": _stripes}


def _sample(kind, rng, count, h, w, noise):
    maker = _MAKERS[kind]
    out = np.empty((count, h, w, 3))
    for i in range(count):
        img = maker(rng, h, w)
        if noise > 0:
            img = img + noise * rng.standard_normal(img.shape)
        out[i] = np.clip(img, 0.0, 1.0)
    return out


def synth_dataset(kind, count, height, width, noise=0.02, master_seed=0, reference_count=None):
    """Return ``(images, denoiser)``.

    ``images`` is ``(count, H, W, 3)``; ``denoiser`` is an empirical
    :class:`DenoiserSpec` over ``reference_count`` (default ``count``) further
    images from the same family.
    """
    if kind not in _MAKERS:
        raise ConfigError("pattern", f"unknown pattern family {kind!r}; choose from {PATTERNS}")
    if count < 1:
        raise ConfigError("count", f"must be >= 1, got {count}")
    if height < MIN_SIDE or width < MIN_SIDE:
        raise ConfigError("geometry", f"images must be at least {MIN_SIDE}x{MIN_SIDE}, got {height}x{width}")
    if noise < 0:
        raise ConfigError("noise", f"must be >= 0, got {noise}")
    reference_count = count if reference_count is None else reference_count
    if reference_count < 1:
        raise ConfigError("reference_count", f"must be >= 1, got {reference_count}")
    eval_ss, ref_ss = np.random.SeedSequence(int(master_seed)).spawn(2)
    images = _sample(kind, np.random.default_rng(eval_ss), count, height, width, noise)
    refs = _sample(kind, np.random.default_rng(ref_ss), reference_count, height, width, noise)
    return images, DenoiserSpec.empirical(refs)


def load_directory(path):
    """All ``*.png`` files in ``path`` sorted by name, as ``(names, images)``."""
    path = Path(path)
    files = sorted(path.glob("*.png"))
    if not files:
        raise ConfigError("dataset.path", f"no PNG files in {path}")
    images = [load_image(f) for f in files]
    shapes = {im.shape for im in images}
    if len(shapes) != 1:
        raise ConfigError("dataset.path", f"images in {path} do not share one geometry: {sorted(shapes)}")
    return [f.stem for f in files], np.stack(images)
