"""Experiment configuration: one JSON document, every field optional.

Example with all defaults spelled out::

    {
      "dataset": {"kind": "synthetic", "pattern": "shapes", "count": 64,
                  "height": 32, "width": 32, "noise": 0.02, "reference_count": 64},
      "degradation": {"blur_sigma": 1.0, "chroma_gain": 0.5, "quant_levels": 16},
      "schedule": {"total_steps": 20, "beta_start": 0.0001, "beta_end": 0.3},
      "selection": {"num_candidates": 5, "truncation_steps": [10, 15, 20],
                    "eta": 0.0, "guidance_weight": 0.3, "base_seed": 0},
      "trials": 1,
      "master_seed": 0,
      "output_dir": "results",
      "workers": 1
    }

A directory dataset uses ``{"kind": "directory", "path": ..., "reference_path": ...}``:
``path`` holds the evaluation PNGs, ``reference_path`` the denoiser's images.
"""
import json
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Optional

from .degradation import DegradationConfig
from .diffusion import build_schedule
from .errors import ConfigError, ImageIOError


def _reject_unknown(section, d, cls):
    allowed = {f.name for f in fields(cls)}
    unknown = set(d) - allowed
    if unknown:
        raise ConfigError(section, f"unknown keys {sorted(unknown)}")


@dataclass(frozen=True)
class DatasetConfig:
    kind: str = "synthetic"
    pattern: str = "shapes"
    count: int = 64
    height: int = 32
    width: int = 32
    noise: float = 0.02
    reference_count: int = 64
    path: Optional[str] = None
    reference_path: Optional[str] = None

    def __post_init__(self):
        if self.kind not in ("synthetic", "directory"):
            raise ConfigError("dataset.kind", f"must be 'synthetic' or 'directory', got {self.kind!r}")
        if self.kind == "directory" and (not self.path or not self.reference_path):
            raise ConfigError("dataset.path", "directory datasets need both 'path' and 'reference_path'")
        for name in ("count", "reference_count"):
            if getattr(self, name) < 1:
                raise ConfigError(f"dataset.{name}", "must be >= 1")


@dataclass(frozen=True)
class ScheduleConfig:
    total_steps: int = 20
    beta_start: float = 1e-4
    beta_end: float = 0.3

    def build(self):
        try:
            return build_schedule(self.total_steps, self.beta_start, self.beta_end)
        except ConfigError as exc:
            raise ConfigError(f"schedule.{exc.field}", str(exc)) from exc


@dataclass(frozen=True)
class SweepConfig:
    num_candidates: int = 5
    truncation_steps: tuple = (10, 15, 20)
    eta: float = 0.0
    guidance_weight: float = 0.3
    base_seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "truncation_steps", tuple(int(t) for t in self.truncation_steps))
        if not 1 <= self.num_candidates <= 0xFFFF:
            raise ConfigError("selection.num_candidates", "must be in [1, 65535]")
        if not self.truncation_steps:
            raise ConfigError("selection.truncation_steps", "must list at least one step")
        if self.eta < 0:
            raise ConfigError("selection.eta", "must be >= 0")
        if self.guidance_weight < 0:
            raise ConfigError("selection.guidance_weight", "must be >= 0")
        if not 0 <= self.base_seed < 2 ** 64:
            raise ConfigError("selection.base_seed", "must be an unsigned 64-bit integer")


@dataclass(frozen=True)
class ExperimentConfig:
    dataset: DatasetConfig = field(default_factory=DatasetConfig)
    degradation: DegradationConfig = field(default_factory=DegradationConfig)
    schedule: ScheduleConfig = field(default_factory=ScheduleConfig)
    selection: SweepConfig = field(default_factory=SweepConfig)
    trials: int = 1
    master_seed: int = 0
    output_dir: str = "results"
    workers: int = 1

    def __post_init__(self):
        T = self.schedule.total_steps
        for t in self.selection.truncation_steps:
            if not 1 <= t <= T:
                raise ConfigError("selection.truncation_steps", f"step {t} outside [1, {T}]")
        if self.trials < 1:
            raise ConfigError("trials", "must be >= 1")
        if self.workers < 1:
            raise ConfigError("workers", "must be >= 1")
        if not 0 <= self.master_seed < 2 ** 64:
            raise ConfigError("master_seed", "must be an unsigned 64-bit integer")

    @classmethod
    def from_dict(cls, d):
        d = dict(d or {})
        _reject_unknown("config", d, cls)
        sections = {}
        for name, sub in (("dataset", DatasetConfig), ("schedule", ScheduleConfig),
                          ("selection", SweepConfig)):
            part = d.pop(name, None) or {}
            if not isinstance(part, dict):
                raise ConfigError(name, "must be an object")
            _reject_unknown(name, part, sub)
            try:
                sections[name] = sub(**part)
            except TypeError as exc:
                raise ConfigError(name, str(exc)) from exc
        try:
            sections["degradation"] = DegradationConfig.from_dict(d.pop("degradation", None))
        except ConfigError as exc:
            name = exc.field if exc.field == "degradation" else f"degradation.{exc.field}"
            raise ConfigError(name, str(exc)) from exc
        except TypeError as exc:
            raise ConfigError("degradation", str(exc)) from exc
        return cls(**sections, **d)

    def to_dict(self):
        out = asdict(self)
        out["selection"]["truncation_steps"] = list(self.selection.truncation_steps)
        return out

    def with_overrides(self, master_seed=None, base_seed=None, workers=None, output_dir=None):
        cfg = self
        if master_seed is not None:
            cfg = replace(cfg, master_seed=master_seed)
        if base_seed is not None:
            cfg = replace(cfg, selection=replace(cfg.selection, base_seed=base_seed))
        if workers is not None:
            cfg = replace(cfg, workers=workers)
        if output_dir is not None:
            cfg = replace(cfg, output_dir=str(output_dir))
        return cfg


def load_config(path):
    """Read a JSON config; ``None`` gives all defaults."""
    if path is None:
        return ExperimentConfig()
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ImageIOError(f"{path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("config", f"{path}: invalid JSON ({exc})") from exc
    return ExperimentConfig.from_dict(data)
