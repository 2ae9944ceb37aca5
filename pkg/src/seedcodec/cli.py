"""Command-line entry point: ``seedcodec <subcommand>``.

Machine-readable results go to stdout as JSON; progress and errors go to
stderr. Exit codes: 0 success, 2 configuration error, 3 I/O error,
4 sidecar format/corruption error.
"""
import argparse
import json
import logging
import sys
from pathlib import Path

from .colorimetry import metric_report
from .config import load_config
from .datasets import load_directory, synth_dataset
from .degradation import degrade
from .diffusion import DenoiserSpec, GuidanceConfig
from .errors import ConfigError, DimensionError, ImageIOError, SidecarError
from .experiment import run_experiment, write_report
from .imageio import load_image, save_image
from .selection import (SelectionConfig, decode_from_seed, finalize, generate_candidates,
                        select_seed)
from .sidecar import SeedSidecar, read_sidecar, write_sidecar

log = logging.getLogger("seedcodec")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_FORMAT = 4


def _u64(text):
    v = int(text, 0)
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError(f"{text} is not an unsigned 64-bit integer")
    return v


def _positive(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def build_denoiser(cfg, shape):
    """Reference set for the denoiser; encoder and decoder must build the same one."""
    ds = cfg.dataset
    if ds.kind == "synthetic":
        _, spec = synth_dataset(ds.pattern, 1, shape[0], shape[1], ds.noise, cfg.master_seed,
                                ds.reference_count)
        return spec
    _, refs = load_directory(ds.reference_path)
    if refs.shape[1:] != tuple(shape):
        raise ConfigError("dataset.reference_path",
                          f"reference images are {refs.shape[1:]}, input is {tuple(shape)}")
    return DenoiserSpec.empirical(refs)


def _guidance(cfg, machine):
    w = cfg.selection.guidance_weight
    return GuidanceConfig(w, machine, cfg.degradation) if w > 0 else None


def _emit(obj):
    sys.stdout.write(json.dumps(obj, indent=2) + "\n")


def cmd_encode(args, cfg):
    x = load_image(args.input)
    save_image(args.output, degrade(x, cfg.degradation))
    log.info("wrote machine-oriented image %s", args.output)
    return EXIT_OK


def cmd_select_seed(args, cfg):
    original = load_image(args.original)
    machine = load_image(args.machine)
    if original.shape != machine.shape:
        raise DimensionError(f"original {original.shape} vs machine image {machine.shape}")
    sched = cfg.schedule.build()
    t = args.truncation_step if args.truncation_step is not None else min(cfg.selection.truncation_steps)
    sel = SelectionConfig(num_candidates=cfg.selection.num_candidates, truncation_step=t,
                          total_steps=sched.total_steps, base_seed=cfg.selection.base_seed,
                          eta=cfg.selection.eta)
    spec = build_denoiser(cfg, original.shape)
    guide = _guidance(cfg, machine)
    records = generate_candidates(original, machine, sel, spec, guide, sched)
    report = select_seed(records)
    winner = records[report.chosen_index]

    out_dir = Path(cfg.output_dir)
    sidecar_path = Path(args.sidecar) if args.sidecar else out_dir / "seed.gsds"
    report_path = Path(args.report) if args.report else out_dir / "selection.json"
    for p in (sidecar_path, report_path):
        p.parent.mkdir(parents=True, exist_ok=True)
    write_sidecar(sidecar_path, SeedSidecar(sched.total_steps, sel.num_candidates,
                                            report.chosen_index, sel.base_seed))

    final = None
    if args.final:
        final = finalize(winner, spec, guide, sel.eta, sched, machine)
        save_image(args.final, final)
    doc = {
        "truncation_step": t,
        "total_steps": sched.total_steps,
        "num_candidates": sel.num_candidates,
        "base_seed": sel.base_seed,
        "derived_seeds": [r.derived_seed for r in records],
        **report.to_dict(),
    }
    if final is not None:
        doc["final_metrics"] = metric_report(final, original).to_dict()
    report_path.write_text(json.dumps(doc, indent=2) + "\n")
    log.info("chosen index %d of %d at t=%d", report.chosen_index, sel.num_candidates, t)
    _emit({"chosen_index": report.chosen_index, "scores_db": report.scores_db,
           "sidecar": str(sidecar_path)})
    return EXIT_OK


def cmd_reconstruct(args, cfg):
    machine = load_image(args.machine)
    side = read_sidecar(args.sidecar)
    sched = cfg.schedule.build()
    if side.total_steps != sched.total_steps:
        raise ConfigError("schedule.total_steps",
                          f"sidecar was made with T={side.total_steps}, config has {sched.total_steps}")
    spec = build_denoiser(cfg, machine.shape)
    out = decode_from_seed(side.base_seed, side.selected_index, spec, _guidance(cfg, machine),
                           cfg.selection.eta, sched, machine)
    save_image(args.output, out)
    log.info("reconstructed %s from seed index %d", args.output, side.selected_index)
    return EXIT_OK


def cmd_metrics(args, cfg):
    a = load_image(args.a)
    b = load_image(args.b)
    _emit(metric_report(a, b).to_dict())
    return EXIT_OK


def cmd_experiment(args, cfg):
    report = run_experiment(cfg)
    json_path, csv_path = write_report(report, cfg.output_dir)
    log.info("wrote %s and %s", json_path, csv_path)
    _emit(report["summary"])
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="seedcodec", description=__doc__.splitlines()[0])
    p.add_argument("--config", help="JSON experiment/codec configuration")
    p.add_argument("--workers", type=_positive, help="parallel worker processes")
    p.add_argument("--output-dir", help="directory for reports and default outputs")
    p.add_argument("--seed", type=_u64,
                   help="base seed for select-seed; master seed for experiment")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("encode", help="simulate the machine-oriented codec")
    s.add_argument("input")
    s.add_argument("output")
    s.set_defaults(func=cmd_encode)

    s = sub.add_parser("select-seed", help="encoder-side seed search")
    s.add_argument("original")
    s.add_argument("machine")
    s.add_argument("--sidecar", help="sidecar output path (default <output-dir>/seed.gsds)")
    s.add_argument("--report", help="score report path (default <output-dir>/selection.json)")
    s.add_argument("-t", "--truncation-step", type=int,
                   help="steps completed before scoring (default: smallest configured)")
    s.add_argument("--final", help="also write the finalized winner PNG here")
    s.set_defaults(func=cmd_select_seed)

    s = sub.add_parser("reconstruct", help="decoder-side reconstruction from a sidecar")
    s.add_argument("machine")
    s.add_argument("sidecar")
    s.add_argument("output")
    s.set_defaults(func=cmd_reconstruct)

    s = sub.add_parser("metrics", help="PSNR, Y-PSNR and SSIM between two PNGs")
    s.add_argument("a")
    s.add_argument("b")
    s.set_defaults(func=cmd_metrics)

    s = sub.add_parser("experiment", help="baseline vs seed selection over a dataset")
    s.set_defaults(func=cmd_experiment)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        cfg = load_config(args.config)
        if args.command == "experiment":
            cfg = cfg.with_overrides(master_seed=args.seed, base_seed=args.seed)
        else:
            cfg = cfg.with_overrides(base_seed=args.seed)
        cfg = cfg.with_overrides(workers=args.workers, output_dir=args.output_dir)
        return args.func(args, cfg)
    except (ConfigError, DimensionError) as exc:
        log.error("configuration error: %s", exc)
        return EXIT_CONFIG
    except SidecarError as exc:
        log.error("sidecar error (%s): %s", type(exc).__name__, exc)
        return EXIT_FORMAT
    except (ImageIOError, OSError) as exc:
        log.error("I/O error: %s", exc)
        return EXIT_IO


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
