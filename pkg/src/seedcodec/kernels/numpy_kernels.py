"""Reference numpy implementations of the hot kernels.

Each function here has a twin in :mod:`seedcodec.kernels.numba_kernels` with an
identical signature. Results agree to rounding, not bitwise.
"""
import numpy as np


def fold_index(j, n):
    """Map integer positions onto ``[0, n)`` by half-sample symmetric reflection.

    ``... c b a | a b c ... | c b a ...``; repeated bounces are handled by
    folding modulo the ``2n`` period, so kernels wider than the image work.
    """
    m = np.mod(j, 2 * n)
    return np.where(m >= n, 2 * n - 1 - m, m)


def _blur_axis(x, kernel, axis):
    n = x.shape[axis]
    r = (kernel.shape[0] - 1) // 2
    base = np.arange(n)
    out = np.zeros_like(x)
    for tap in range(kernel.shape[0]):
        idx = fold_index(base + tap - r, n)
        out += kernel[tap] * np.take(x, idx, axis=axis)
    return out


def separable_blur(img, kernel):
    """Blur an ``(H, W, C)`` array along rows then columns with a 1-D kernel."""
    img = np.asarray(img, dtype=np.float64)
    if kernel.shape[0] == 1:
        return img * kernel[0] * kernel[0]
    return _blur_axis(_blur_axis(img, kernel, 0), kernel, 1)


def filter_valid(plane, kernel):
    """Separable correlation of a 2-D plane, keeping only fully-covered outputs."""
    plane = np.asarray(plane, dtype=np.float64)
    k = kernel.shape[0]
    h, w = plane.shape
    tmp = np.zeros((h - k + 1, w))
    for tap in range(k):
        tmp += kernel[tap] * plane[tap:tap + h - k + 1, :]
    out = np.zeros((h - k + 1, w - k + 1))
    for tap in range(k):
        out += kernel[tap] * tmp[:, tap:tap + w - k + 1]
    return out


def empirical_posterior_mean(x, refs, scale, var):
    """Posterior mean of a uniform delta mixture over ``refs`` given ``x``.

    ``x`` is flat ``(D,)``, ``refs`` is ``(M, D)``; the likelihood of reference
    ``i`` is ``N(x; scale * refs[i], var * I)``.
    """
    diff = x[None, :] - scale * refs
    logits = -np.sum(diff * diff, axis=1) / (2.0 * var)
    logits -= logits.max()
    w = np.exp(logits)
    w /= w.sum()
    return w @ refs
