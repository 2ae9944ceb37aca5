"""Early-step seed selection.

Run ``N`` seeded trajectories to an intermediate step ``t``, score the clamped
clean-image estimate of each against the ground truth with Y-PSNR, keep the
best seed, and finish only that trajectory. Only ``(base_seed, index)`` needs
to reach the decoder.
"""
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import diffusion
from .colorimetry import MetricReport, cc_merge, y_psnr
from .errors import ConfigError, DimensionError, SeedCodecError, TrajectoryError

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15


def splitmix64_mix(z):
    """The splitmix64 output finalizer (a bijection on 64-bit integers)."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def derive_seed(base_seed, index):
    """Seed of candidate ``index``: output ``index + 1`` of splitmix64 seeded with ``base_seed``.

    Distinct indices below 2**64 map to distinct seeds because the state
    increment is odd and the finalizer is a bijection.
    """
    if index < 0:
        raise ConfigError("index", f"must be >= 0, got {index}")
    return splitmix64_mix(int(base_seed) + (int(index) + 1) * GOLDEN_GAMMA)


@dataclass(frozen=True)
class SelectionConfig:
    num_candidates: int = 5
    truncation_step: int = 10
    total_steps: int = 20
    base_seed: int = 0
    eta: float = 0.0
    metric: str = "y_psnr"

    def __post_init__(self):
        if int(self.num_candidates) != self.num_candidates or self.num_candidates < 1:
            raise ConfigError("num_candidates", f"must be a positive integer, got {self.num_candidates}")
        if self.num_candidates > 0xFFFF:
            raise ConfigError("num_candidates", "must fit in 16 bits")
        if int(self.total_steps) != self.total_steps or self.total_steps < 1:
            raise ConfigError("total_steps", f"must be a positive integer, got {self.total_steps}")
        if not 1 <= self.truncation_step <= self.total_steps:
            raise ConfigError("truncation_step",
                              f"must be in [1, {self.total_steps}], got {self.truncation_step}")
        if not 0 <= int(self.base_seed) <= MASK64:
            raise ConfigError("base_seed", "must be an unsigned 64-bit integer")
        if self.eta < 0:
            raise ConfigError("eta", f"must be >= 0, got {self.eta}")
        if self.metric != "y_psnr":
            raise ConfigError("metric", "only 'y_psnr' is supported")


@dataclass(frozen=True)
class CandidateRecord:
    seed_index: int
    derived_seed: int
    checkpoint: diffusion.TrajectoryCheckpoint
    score_db: float


@dataclass(frozen=True)
class SelectionReport:
    chosen_index: int
    scores_db: list
    oracle_index: Optional[int] = None
    agreed_with_oracle: Optional[bool] = None
    final_metrics: Optional[MetricReport] = None

    def to_dict(self):
        return {
            "chosen_index": self.chosen_index,
            "scores_db": list(self.scores_db),
            "oracle_index": self.oracle_index,
            "agreed_with_oracle": self.agreed_with_oracle,
            "final_metrics": None if self.final_metrics is None else self.final_metrics.to_dict(),
        }


def score_estimate(ckpt, ground_truth):
    """Y-PSNR of the clamped clean-image estimate held by ``ckpt``."""
    return y_psnr(np.clip(ckpt.x0_estimate, 0.0, 1.0), ground_truth)


def _one_candidate(i, ground_truth, cfg, spec, g, sched, seed_fn):
    seed = seed_fn(cfg.base_seed, i)
    try:
        ckpt = diffusion.run_trajectory(seed, cfg.truncation_step, spec, g, cfg.eta, sched)
    except SeedCodecError as exc:
        raise TrajectoryError(i, exc) from exc
    return CandidateRecord(i, seed, ckpt, score_estimate(ckpt, ground_truth))


def generate_candidates(ground_truth, condition, cfg, spec, g, sched, executor=None,
                        seed_fn=derive_seed):
    """Build ``cfg.num_candidates`` records truncated at ``cfg.truncation_step``.

    ``executor`` (any ``concurrent.futures`` executor) runs candidates in
    parallel; ``map`` keeps output in index order either way. ``seed_fn`` exists
    so tests can force seed collisions.
    """
    ground_truth = np.asarray(ground_truth, dtype=np.float64)
    if ground_truth.shape != np.shape(condition) or ground_truth.shape != spec.image_shape:
        raise DimensionError(f"ground truth {ground_truth.shape}, condition {np.shape(condition)}, "
                             f"denoiser {spec.image_shape} must agree")
    if sched.total_steps != cfg.total_steps:
        raise ConfigError("total_steps", f"config says {cfg.total_steps}, schedule has {sched.total_steps}")
    if g is not None and np.shape(g.condition) != ground_truth.shape:
        raise DimensionError("guidance condition geometry differs from the image")
    idx = range(cfg.num_candidates)
    if executor is None:
        return [_one_candidate(i, ground_truth, cfg, spec, g, sched, seed_fn) for i in idx]
    n = cfg.num_candidates
    return list(executor.map(_one_candidate, idx, [ground_truth] * n, [cfg] * n, [spec] * n,
                             [g] * n, [sched] * n, [seed_fn] * n))


def argmax_first(scores):
    """Index of the largest score, smallest index on ties."""
    if len(scores) == 0:
        raise ConfigError("records", "cannot select from an empty list")
    best = 0
    for i, s in enumerate(scores):
        if s > scores[best]:
            best = i
    return best


def select_seed(records):
    scores = [r.score_db for r in records]
    return SelectionReport(chosen_index=argmax_first(scores), scores_db=scores)


def finalize(record, spec, g, eta, sched, condition):
    """Encoder side: resume the winning checkpoint to ``T`` and apply the CC merge."""
    ckpt = diffusion.resume(record.checkpoint, sched.total_steps, spec, g, eta, sched)
    return cc_merge(np.clip(ckpt.x0_estimate, 0.0, 1.0), condition)


def decode_from_seed(base_seed, index, spec, g, eta, sched, condition):
    """Decoder side: regenerate from the transmitted seed alone, all ``T`` steps."""
    seed = derive_seed(base_seed, index)
    ckpt = diffusion.run_trajectory(seed, sched.total_steps, spec, g, eta, sched)
    return cc_merge(np.clip(ckpt.x0_estimate, 0.0, 1.0), condition)


def agreement_rate(pairs):
    """Fraction of ``(chosen, oracle)`` pairs that match."""
    pairs = list(pairs)
    if not pairs:
        raise ConfigError("per_image", "agreement over an empty list")
    return sum(1 for c, o in pairs if c == o) / len(pairs)
