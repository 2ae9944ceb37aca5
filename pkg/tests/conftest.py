import numpy as np
import pytest

from seedcodec import diffusion
from seedcodec.degradation import DegradationConfig, degrade

ACCEPTANCE_LINES = []


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def random_image(rng, h=16, w=16):
    return rng.uniform(0.0, 1.0, (h, w, 3))


@pytest.fixture
def small_problem():
    """8x8 empirical denoiser with guidance: cheap enough for many trajectories."""
    r = np.random.default_rng(7)
    refs = r.uniform(0.0, 1.0, (6, 8, 8, 3))
    gt = r.uniform(0.0, 1.0, (8, 8, 3))
    op = DegradationConfig(blur_sigma=0.8, chroma_gain=0.5, quant_levels=8)
    cond = degrade(gt, op)
    spec = diffusion.DenoiserSpec.empirical(refs)
    guide = diffusion.GuidanceConfig(0.3, cond, op)
    sched = diffusion.build_schedule(20, 1e-4, 0.3)
    return gt, cond, spec, guide, sched


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
