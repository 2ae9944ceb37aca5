"""Early-step seed selection for diffusion-based reconstruction of human-viewable
images from machine-oriented ones, with a fixed-size seed sidecar."""
from .colorimetry import cc_merge, metric_report, psnr, rgb_to_ycbcr, ssim, y_psnr, ycbcr_to_rgb
from .degradation import DegradationConfig, degrade, degrade_adjoint
from .diffusion import (DenoiserSpec, GuidanceConfig, NoiseSchedule, TrajectoryCheckpoint,
                        build_schedule, run_trajectory)
from .kernels import BACKEND
from .selection import (SelectionConfig, agreement_rate, derive_seed, finalize,
                        generate_candidates, select_seed)
from .sidecar import SeedSidecar, decode_sidecar, encode_sidecar

__version__ = "0.1.0"
