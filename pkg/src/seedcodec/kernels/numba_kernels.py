"""numba-compiled twins of :mod:`seedcodec.kernels.numpy_kernels`."""
import math

import numpy as np
from numba import njit


@njit(cache=True, inline="always")
def _fold(j, n):
    m = j % (2 * n)
    if m >= n:
        m = 2 * n - 1 - m
    return m


@njit(cache=True)
def separable_blur(img, kernel):
    h, w, c = img.shape
    k = kernel.shape[0]
    r = (k - 1) // 2
    tmp = np.zeros((h, w, c))
    for i in range(h):
        for t in range(k):
            src = _fold(i + t - r, h)
            kt = kernel[t]
            for j in range(w):
                for ch in range(c):
                    tmp[i, j, ch] += kt * img[src, j, ch]
    out = np.zeros((h, w, c))
    for i in range(h):
        for j in range(w):
            for t in range(k):
                src = _fold(j + t - r, w)
                kt = kernel[t]
                for ch in range(c):
                    out[i, j, ch] += kt * tmp[i, src, ch]
    return out


@njit(cache=True)
def filter_valid(plane, kernel):
    h, w = plane.shape
    k = kernel.shape[0]
    oh = h - k + 1
    ow = w - k + 1
    tmp = np.zeros((oh, w))
    for i in range(oh):
        for t in range(k):
            kt = kernel[t]
            for j in range(w):
                tmp[i, j] += kt * plane[i + t, j]
    out = np.zeros((oh, ow))
    for i in range(oh):
        for j in range(ow):
            acc = 0.0
            for t in range(k):
                acc += kernel[t] * tmp[i, j + t]
            out[i, j] = acc
    return out


@njit(cache=True)
def empirical_posterior_mean(x, refs, scale, var):
    m, d = refs.shape
    logits = np.empty(m)
    for i in range(m):
        acc = 0.0
        for p in range(d):
            diff = x[p] - scale * refs[i, p]
            acc += diff * diff
        logits[i] = -acc / (2.0 * var)
    top = logits.max()
    total = 0.0
    for i in range(m):
        logits[i] = math.exp(logits[i] - top)
        total += logits[i]
    out = np.zeros(d)
    for i in range(m):
        wi = logits[i] / total
        if wi == 0.0:
            continue
        for p in range(d):
            out[p] += wi * refs[i, p]
    return out
