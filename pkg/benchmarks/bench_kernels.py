"""Compare the numba and numpy kernel backends.

Part 1 times each kernel in-process with both implementations and checks that
they agree. Part 2 runs a small experiment end to end in a subprocess per
backend, since the backend is fixed at import time.

    python benchmarks/bench_kernels.py [--repeat 20] [--images 8]
"""
import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from seedcodec.colorimetry import gaussian_window
from seedcodec.degradation import blur_kernel
from seedcodec.kernels import numba_kernels, numpy_kernels

END_TO_END = """
import time
from seedcodec import kernels
from seedcodec.config import DatasetConfig, ExperimentConfig
from seedcodec.experiment import run_experiment
cfg = ExperimentConfig(dataset=DatasetConfig(count={images}))
run_experiment(ExperimentConfig(dataset=DatasetConfig(count=1)))  # compile / warm up
t = time.perf_counter()
run_experiment(cfg)
print(kernels.BACKEND, time.perf_counter() - t)
"""


def cases():
    r = np.random.default_rng(0)
    img = r.uniform(size=(32, 32, 3))
    refs = r.uniform(size=(64, 32 * 32 * 3))
    x = r.standard_normal(32 * 32 * 3)
    return {
        "separable_blur 32x32x3 sigma=1": ("separable_blur", (img, blur_kernel(1.0))),
        "filter_valid 32x32 11x11": ("filter_valid", (img[..., 0].copy(), gaussian_window())),
        "empirical_posterior_mean 64 refs": ("empirical_posterior_mean", (x, refs, 0.5, 0.75)),
    }


def bench_kernels(repeat):
    print(f"{'kernel':36s} {'numpy us':>10s} {'numba us':>10s} {'speedup':>8s} {'max diff':>9s}")
    for label, (name, args) in cases().items():
        f_np = getattr(numpy_kernels, name)
        f_nb = getattr(numba_kernels, name)
        diff = np.max(np.abs(f_np(*args) - f_nb(*args)))  # also triggers compilation
        t_np = min(timeit.repeat(lambda: f_np(*args), number=10, repeat=repeat)) / 10
        t_nb = min(timeit.repeat(lambda: f_nb(*args), number=10, repeat=repeat)) / 10
        print(f"{label:36s} {1e6 * t_np:10.1f} {1e6 * t_nb:10.1f} {t_np / t_nb:8.2f} {diff:9.1e}")


def bench_end_to_end(images):
    print(f"\nend to end: one trial, {images} images, N=5, T=20")
    for backend in ("numpy", "numba"):
        env = dict(os.environ, SEEDCODEC_BACKEND=backend)
        out = subprocess.run([sys.executable, "-c", END_TO_END.format(images=images)], env=env,
                             capture_output=True, text=True, check=True)
        name, seconds = out.stdout.split()
        print(f"  {name:6s} {float(seconds):8.2f} s")


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=20)
    p.add_argument("--images", type=int, default=8)
    args = p.parse_args()
    bench_kernels(args.repeat)
    bench_end_to_end(args.images)


if __name__ == "__main__":
    main()
