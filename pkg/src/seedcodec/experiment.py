"""Strategy comparison over a dataset: fixed-seed baseline vs selection at each t.

Every candidate trajectory is run once to ``T``; scores at each configured
``t`` are read off checkpoints along the way. Suffix determinism makes this
equal to regenerating per ``t``.

Report schema (``report.json``)::

    {
      "config": {...},              # resolved config minus output_dir/workers
      "backend": "numba" | "numpy",
      "baseline": "candidate index 0 of the derived-seed family",
      "trials": [
        {"trial": 0, "dataset_seed": u64, "base_seed": u64,
         "images": [{"image_id", "scores_db": {"<t>": [N floats]},
                     "chosen_index": {"<t>": int}, "oracle_index": int,
                     "agreed": {"<t>": bool},
                     "metrics": {"<strategy>": {psnr_db, y_psnr_db, ssim, lpips}}}],
         "strategies": [{"strategy", "truncation_step", "num_candidates",
                         "mean_psnr_db", "mean_y_psnr_db", "mean_ssim", "lpips"}],
         "agreement": {"<t>": rate}}
      ],
      "summary": {
        "strategies": [... same fields, averaged over trials ...],
        "agreement": {"<t>": mean rate over trials},
        "sign_test": {"<t>": {"positive", "negative", "ties", "p_value"}}
      }
    }

``report.csv`` has one row per (trial, strategy) plus ``trial == "mean"`` rows,
columns ``trial, strategy, truncation_step, num_candidates, mean_psnr_db,
mean_y_psnr_db, mean_ssim, agreement``.
"""
import csv
import io
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import diffusion, kernels
from .colorimetry import cc_merge, metric_report
from .datasets import load_directory, synth_dataset
from .degradation import degrade
from .diffusion import DenoiserSpec
from .errors import ConfigError
from .selection import argmax_first, derive_seed, score_estimate

log = logging.getLogger(__name__)

BASELINE = "baseline"
CSV_COLUMNS = ["trial", "strategy", "truncation_step", "num_candidates", "mean_psnr_db",
               "mean_y_psnr_db", "mean_ssim", "agreement"]


def strategy_name(t):
    return f"t={t}"


def evaluate_image(image_id, ground_truth, spec, cfg, base_seed):
    """All strategies for one image. Pure function of its arguments."""
    sched = cfg.schedule.build()
    T = sched.total_steps
    sel = cfg.selection
    steps = sorted(set(sel.truncation_steps) | {T})
    condition = degrade(ground_truth, cfg.degradation)
    guide = None
    if sel.guidance_weight > 0:
        guide = diffusion.GuidanceConfig(sel.guidance_weight, condition, cfg.degradation)

    scores = {t: [] for t in steps}
    finals = []
    for i in range(sel.num_candidates):
        ckpt = diffusion.init_checkpoint(derive_seed(base_seed, i), ground_truth.shape)
        for t in steps:
            ckpt = diffusion.resume(ckpt, t, spec, guide, sel.eta, sched)
            scores[t].append(score_estimate(ckpt, ground_truth))
        finals.append(metric_report(cc_merge(np.clip(ckpt.x0_estimate, 0.0, 1.0), condition),
                                    ground_truth))

    oracle = argmax_first(scores[T])
    chosen = {t: argmax_first(scores[t]) for t in sel.truncation_steps}
    metrics = {BASELINE: finals[0].to_dict()}
    for t in sel.truncation_steps:
        metrics[strategy_name(t)] = finals[chosen[t]].to_dict()
    return {
        "image_id": image_id,
        "scores_db": {str(t): scores[t] for t in sel.truncation_steps},
        "chosen_index": {str(t): chosen[t] for t in sel.truncation_steps},
        "oracle_index": oracle,
        "agreed": {str(t): chosen[t] == oracle for t in sel.truncation_steps},
        "metrics": metrics,
    }


def _evaluate_packed(args):
    return evaluate_image(*args)


def trial_seeds(cfg, trial):
    return derive_seed(cfg.master_seed, trial), derive_seed(cfg.selection.base_seed, trial)


def load_trial_data(cfg, dataset_seed):
    """``(image_ids, images, denoiser)`` for one trial."""
    ds = cfg.dataset
    if ds.kind == "synthetic":
        images, spec = synth_dataset(ds.pattern, ds.count, ds.height, ds.width, ds.noise,
                                     dataset_seed, ds.reference_count)
        ids = [f"img{i:04d}" for i in range(len(images))]
        return ids, images, spec
    ids, images = load_directory(ds.path)
    _, refs = load_directory(ds.reference_path)
    if refs.shape[1:] != images.shape[1:]:
        raise ConfigError("dataset.reference_path", "reference images differ in geometry from evaluation images")
    return ids, images, DenoiserSpec.empirical(refs)


def _strategy_rows(records, cfg):
    names = [BASELINE] + [strategy_name(t) for t in cfg.selection.truncation_steps]
    rows = []
    for name in names:
        ms = [r["metrics"][name] for r in records]
        rows.append({
            "strategy": name,
            "truncation_step": None if name == BASELINE else int(name[2:]),
            "num_candidates": 1 if name == BASELINE else cfg.selection.num_candidates,
            "mean_psnr_db": float(np.mean([m["psnr_db"] for m in ms])),
            "mean_y_psnr_db": float(np.mean([m["y_psnr_db"] for m in ms])),
            "mean_ssim": float(np.mean([m["ssim"] for m in ms])),
            "lpips": "not computed",
        })
    return rows


def sign_test(diffs):
    """One-sided exact sign test of ``median(diffs) > 0``; zero differences are dropped."""
    pos = sum(1 for d in diffs if d > 0)
    neg = sum(1 for d in diffs if d < 0)
    n = pos + neg
    if n == 0:
        p = 1.0
    else:
        p = sum(math.comb(n, k) for k in range(pos, n + 1)) / 2 ** n
    return {"positive": pos, "negative": neg, "ties": len(diffs) - n, "p_value": p}


def run_trial(cfg, trial, executor=None):
    dataset_seed, base_seed = trial_seeds(cfg, trial)
    ids, images, spec = load_trial_data(cfg, dataset_seed)
    jobs = [(iid, img, spec, cfg, base_seed) for iid, img in zip(ids, images)]
    if executor is None:
        records = [_evaluate_packed(j) for j in jobs]
    else:
        records = list(executor.map(_evaluate_packed, jobs))
    records.sort(key=lambda r: r["image_id"])
    agreement = {str(t): float(np.mean([r["agreed"][str(t)] for r in records]))
                 for t in cfg.selection.truncation_steps}
    return {
        "trial": trial,
        "dataset_seed": dataset_seed,
        "base_seed": base_seed,
        "images": records,
        "strategies": _strategy_rows(records, cfg),
        "agreement": agreement,
    }


def summarize(trials, cfg):
    names = [row["strategy"] for row in trials[0]["strategies"]]
    strategies = []
    for j, name in enumerate(names):
        per = [tr["strategies"][j] for tr in trials]
        row = dict(per[0])
        for key in ("mean_psnr_db", "mean_y_psnr_db", "mean_ssim"):
            row[key] = float(np.mean([p[key] for p in per]))
        strategies.append(row)
    agreement = {str(t): float(np.mean([tr["agreement"][str(t)] for tr in trials]))
                 for t in cfg.selection.truncation_steps}
    tests = {}
    for j, t in enumerate(cfg.selection.truncation_steps, start=1):
        diffs = [tr["strategies"][j]["mean_y_psnr_db"] - tr["strategies"][0]["mean_y_psnr_db"]
                 for tr in trials]
        tests[str(t)] = sign_test(diffs)
    return {"strategies": strategies, "agreement": agreement, "sign_test": tests}


def run_experiment(cfg):
    """Run every trial and return the full report dictionary."""
    executor = ProcessPoolExecutor(cfg.workers) if cfg.workers > 1 else None
    try:
        trials = []
        for k in range(cfg.trials):
            log.info("trial %d/%d", k + 1, cfg.trials)
            trials.append(run_trial(cfg, k, executor))
    finally:
        if executor is not None:
            executor.shutdown()
    return {
        "config": {k: v for k, v in cfg.to_dict().items() if k not in ("output_dir", "workers")},
        "backend": kernels.BACKEND,
        "baseline": "candidate index 0 of the derived-seed family",
        "trials": trials,
        "summary": summarize(trials, cfg),
    }


def report_csv(report):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)

    def emit(trial, rows, agreement):
        for row in rows:
            t = row["truncation_step"]
            w.writerow([trial, row["strategy"], "" if t is None else t, row["num_candidates"],
                        repr(row["mean_psnr_db"]), repr(row["mean_y_psnr_db"]), repr(row["mean_ssim"]),
                        "" if t is None else repr(agreement[str(t)])])

    for tr in report["trials"]:
        emit(tr["trial"], tr["strategies"], tr["agreement"])
    emit("mean", report["summary"]["strategies"], report["summary"]["agreement"])
    return buf.getvalue()


def write_report(report, output_dir):
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    json_path = out / "report.json"
    csv_path = out / "report.csv"
    json_path.write_text(json.dumps(report, indent=2) + "\n")
    csv_path.write_text(report_csv(report))
    return json_path, csv_path
