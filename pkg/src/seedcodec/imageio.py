"""8-bit RGB PNG input/output for ``[0, 1]`` float images."""
from pathlib import Path

import numpy as np
from PIL import Image as PILImage

from .errors import ImageIOError


def to_uint8(x):
    """Clamp to [0, 1] and round half up to bytes."""
    x = np.clip(np.asarray(x, dtype=np.float64), 0.0, 1.0)
    return np.floor(x * 255.0 + 0.5).astype(np.uint8)


def quantize8(x):
    return to_uint8(x).astype(np.float64) / 255.0


def load_image(path):
    path = Path(path)
    try:
        with PILImage.open(path) as im:
            if im.mode != "RGB":
                raise ImageIOError(f"{path}: expected an RGB image, got mode {im.mode}")
            arr = np.asarray(im, dtype=np.uint8)
    except ImageIOError:
        raise
    except (OSError, ValueError) as exc:
        raise ImageIOError(f"{path}: {exc}") from exc
    return arr.astype(np.float64) / 255.0


def save_image(path, x):
    path = Path(path)
    x = np.asarray(x)
    if x.ndim != 3 or x.shape[2] != 3:
        raise ImageIOError(f"{path}: expected an (H, W, 3) image, got {x.shape}")
    try:
        PILImage.fromarray(to_uint8(x)).save(path, format="PNG")
    except (OSError, ValueError) as exc:
        raise ImageIOError(f"{path}: {exc}") from exc
