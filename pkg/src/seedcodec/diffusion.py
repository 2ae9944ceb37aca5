"""Seeded, resumable reverse diffusion with exact training-free denoisers.

Index conventions
-----------------
``steps_done`` counts completed reverse steps (0..T) and is what public APIs
expose. Internally the current noise level is ``k = T - steps_done``, running
from ``T`` down to 1; ``alpha_bar(0)`` is defined as 1 so the final step
returns the clean estimate.

PRNG contract
-------------
Each trajectory owns one ``numpy.random.Generator(PCG64(seed))``. Draw order:
one ``standard_normal(shape)`` for the initial latent, then one more per
reverse step with ``eta > 0`` (none when ``eta == 0``). The generator state
travels inside :class:`TrajectoryCheckpoint`, so resuming is bit-exact.
"""
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import kernels
from .degradation import DegradationConfig, degrade_adjoint, degrade_linear
from .errors import ConfigError, DimensionError, StateError


@dataclass(frozen=True)
class NoiseSchedule:
    betas: np.ndarray
    alphas: np.ndarray
    alpha_bars: np.ndarray

    def __post_init__(self):
        b = self.betas
        if b.ndim != 1 or b.size == 0:
            raise ConfigError("betas", "must be a non-empty 1-D array")
        if np.any(b <= 0) or np.any(b >= 1):
            raise ConfigError("betas", "all betas must lie strictly in (0, 1)")
        if np.any(np.diff(self.alpha_bars) >= 0):
            raise ConfigError("alpha_bars", "must be strictly decreasing")

    @property
    def total_steps(self):
        return int(self.betas.size)

    def alpha_bar(self, k):
        """``alpha_bar`` at noise level ``k`` (1-based); ``k == 0`` gives 1."""
        if k == 0:
            return 1.0
        return float(self.alpha_bars[k - 1])


def build_schedule(T, beta_start, beta_end):
    """Linear beta ramp over ``T`` steps, both ends inclusive."""
    if int(T) != T or T < 1:
        raise ConfigError("T", f"must be a positive integer, got {T}")
    if not 0 < beta_start < 1:
        raise ConfigError("beta_start", f"must be in (0, 1), got {beta_start}")
    if not 0 < beta_end < 1:
        raise ConfigError("beta_end", f"must be in (0, 1), got {beta_end}")
    if beta_start > beta_end:
        raise ConfigError("beta_start", f"must not exceed beta_end ({beta_start} > {beta_end})")
    betas = np.linspace(beta_start, beta_end, int(T)) if T > 1 else np.array([float(beta_start)])
    alphas = 1.0 - betas
    return NoiseSchedule(betas, alphas, np.cumprod(alphas))


@dataclass(frozen=True)
class DenoiserSpec:
    """Training-free denoiser: an isotropic Gaussian mixture or a set of images.

    ``empirical`` is the zero-width, equal-weight special case of the mixture;
    it gets its own fast path because it is the one that runs in experiments.
    """
    kind: str
    weights: Optional[np.ndarray] = None
    means: Optional[np.ndarray] = None
    sigmas: Optional[np.ndarray] = None
    dataset: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.kind == "gaussian_mixture":
            if self.means is None or len(self.means) == 0:
                raise ConfigError("components", "mixture has no components")
            k = len(self.means)
            if self.weights is None or self.sigmas is None or len(self.weights) != k or len(self.sigmas) != k:
                raise ConfigError("components", "weights, means and sigmas must have equal length")
            if np.any(self.weights < 0) or abs(float(np.sum(self.weights)) - 1.0) > 1e-9:
                raise ConfigError("weights", "must be nonnegative and sum to 1")
            if np.any(self.sigmas < 0):
                raise ConfigError("sigmas", "must be nonnegative")
        elif self.kind == "empirical":
            if self.dataset is None or len(self.dataset) == 0:
                raise ConfigError("dataset", "empirical denoiser needs at least one image")
        else:
            raise ConfigError("kind", f"unknown denoiser kind {self.kind!r}")

    @classmethod
    def gaussian_mixture(cls, weights, means, sigmas):
        return cls("gaussian_mixture",
                   weights=np.asarray(weights, dtype=np.float64),
                   means=np.asarray(means, dtype=np.float64),
                   sigmas=np.asarray(sigmas, dtype=np.float64))

    @classmethod
    def empirical(cls, images):
        return cls("empirical", dataset=np.ascontiguousarray(images, dtype=np.float64))

    @property
    def image_shape(self):
        arr = self.dataset if self.kind == "empirical" else self.means
        return tuple(arr.shape[1:])


@dataclass(frozen=True)
class GuidanceConfig:
    weight: float
    condition: np.ndarray
    operator: DegradationConfig

    def __post_init__(self):
        if not self.weight >= 0:
            raise ConfigError("guidance_weight", f"must be >= 0, got {self.weight}")


@dataclass(frozen=True)
class TrajectoryCheckpoint:
    latent: np.ndarray
    steps_done: int
    rng_state: dict
    seed_id: int
    x0_estimate: np.ndarray = field(repr=False)


def _check_level(k, sched):
    if not 1 <= k <= sched.total_steps:
        raise ConfigError("k", f"noise level must be in [1, {sched.total_steps}], got {k}")


def forward_sample(x0, k, eps, sched):
    x0 = np.asarray(x0, dtype=np.float64)
    eps = np.asarray(eps, dtype=np.float64)
    if x0.shape != eps.shape:
        raise DimensionError(f"x0 {x0.shape} vs eps {eps.shape}")
    _check_level(k, sched)
    ab = sched.alpha_bar(k)
    return np.sqrt(ab) * x0 + np.sqrt(1.0 - ab) * eps


def predict_x0(x_k, eps_hat, k, sched):
    """Invert the forward process for a given noise estimate. Not clamped."""
    if np.shape(x_k) != np.shape(eps_hat):
        raise DimensionError(f"x_k {np.shape(x_k)} vs eps_hat {np.shape(eps_hat)}")
    _check_level(k, sched)
    ab = sched.alpha_bar(k)
    return (x_k - np.sqrt(1.0 - ab) * eps_hat) / np.sqrt(ab)


def _mixture_score(x, ab, spec):
    d = x.size
    flat = x.reshape(-1)
    mus = np.sqrt(ab) * spec.means.reshape(len(spec.means), -1)
    var = ab * spec.sigmas ** 2 + (1.0 - ab)
    diff = mus - flat[None, :]
    with np.errstate(divide="ignore"):
        log_w = np.log(spec.weights)
    logits = log_w - 0.5 * d * np.log(var) - np.sum(diff * diff, axis=1) / (2.0 * var)
    logits -= logits.max()
    resp = np.exp(logits)
    resp /= resp.sum()
    score = (resp / var) @ diff
    return score.reshape(x.shape)


def denoiser_eps(x_k, k, spec, sched):
    """Exact noise prediction for the data distribution described by ``spec``."""
    x_k = np.asarray(x_k, dtype=np.float64)
    if tuple(x_k.shape) != spec.image_shape:
        raise DimensionError(f"latent {x_k.shape} vs denoiser {spec.image_shape}")
    _check_level(k, sched)
    ab = sched.alpha_bar(k)
    if spec.kind == "gaussian_mixture":
        return -np.sqrt(1.0 - ab) * _mixture_score(x_k, ab, spec)
    refs = spec.dataset.reshape(len(spec.dataset), -1)
    x0 = kernels.empirical_posterior_mean(np.ascontiguousarray(x_k.reshape(-1)), refs,
                                          np.sqrt(ab), 1.0 - ab)
    x0 = x0.reshape(x_k.shape)
    return (x_k - np.sqrt(ab) * x0) / np.sqrt(1.0 - ab)


def guidance_gradient(eps_hat, x_k, k, g, sched):
    """Gradient w.r.t. ``x_k`` of ``0.5 * ||A x0_hat - c||^2`` with ``eps_hat`` frozen."""
    ab = sched.alpha_bar(k)
    x0_hat = predict_x0(x_k, eps_hat, k, sched)
    resid = degrade_linear(x0_hat, g.operator) - g.condition
    return degrade_adjoint(resid, g.operator) / np.sqrt(ab)


def apply_guidance(eps_hat, x_k, k, g, sched):
    if np.shape(g.condition) != np.shape(x_k):
        raise DimensionError(f"condition {np.shape(g.condition)} vs latent {np.shape(x_k)}")
    if g.weight == 0:
        return eps_hat
    ab = sched.alpha_bar(k)
    return eps_hat + g.weight * np.sqrt(1.0 - ab) * guidance_gradient(eps_hat, x_k, k, g, sched)


def _generator(state):
    bg = np.random.PCG64()
    bg.state = state
    return np.random.Generator(bg)


def reverse_step(ckpt, spec, g, eta, sched):
    """One DDIM-style update; ``eta`` interpolates deterministic (0) to ancestral (1)."""
    T = sched.total_steps
    if ckpt.steps_done >= T:
        raise StateError(f"trajectory already complete ({ckpt.steps_done}/{T} steps)")
    if eta < 0:
        raise ConfigError("eta", f"must be >= 0, got {eta}")
    k = T - ckpt.steps_done
    ab = sched.alpha_bar(k)
    ab_prev = sched.alpha_bar(k - 1)
    x = ckpt.latent

    eps = denoiser_eps(x, k, spec, sched)
    if g is not None:
        eps = apply_guidance(eps, x, k, g, sched)
    x0_hat = predict_x0(x, eps, k, sched)

    sigma = eta * np.sqrt((1.0 - ab_prev) / (1.0 - ab)) * np.sqrt(1.0 - ab / ab_prev)
    direction = np.sqrt(max(0.0, 1.0 - ab_prev - sigma * sigma))
    x_prev = np.sqrt(ab_prev) * x0_hat + direction * eps
    rng_state = ckpt.rng_state
    if eta > 0:
        rng = _generator(rng_state)
        z = rng.standard_normal(x.shape)
        x_prev = x_prev + sigma * z
        rng_state = rng.bit_generator.state
    return TrajectoryCheckpoint(x_prev, ckpt.steps_done + 1, rng_state, ckpt.seed_id, x0_hat)


def init_checkpoint(seed, shape):
    """Pure-noise start; ``x0_estimate`` is zeros until the first step runs."""
    seed = int(seed)
    if not 0 <= seed < 2 ** 64:
        raise ConfigError("seed", f"must be an unsigned 64-bit integer, got {seed}")
    rng = np.random.Generator(np.random.PCG64(seed))
    latent = rng.standard_normal(tuple(shape))
    return TrajectoryCheckpoint(latent, 0, rng.bit_generator.state, seed, np.zeros(tuple(shape)))


def resume(ckpt, stop_after, spec, g, eta, sched):
    """Advance ``ckpt`` until ``stop_after`` steps are complete."""
    if not ckpt.steps_done <= stop_after <= sched.total_steps:
        raise ConfigError("stop_after",
                          f"must be in [{ckpt.steps_done}, {sched.total_steps}], got {stop_after}")
    while ckpt.steps_done < stop_after:
        ckpt = reverse_step(ckpt, spec, g, eta, sched)
    return ckpt


def run_trajectory(seed, stop_after, spec, g, eta, sched):
    if not 0 <= stop_after <= sched.total_steps:
        raise ConfigError("stop_after", f"must be in [0, {sched.total_steps}], got {stop_after}")
    return resume(init_checkpoint(seed, spec.image_shape), stop_after, spec, g, eta, sched)
