# coding=utf-8
"""
Purpose:   [1] command line entry: train, render, eval, federate, sweep, partition, budget, export, check
           [2] every RunConfig key is a flag (--key or --key-with-dashes), --config FILE loads key=value text
           [3] exit 0 on success, 2 on usage / configuration errors, 1 on runtime failures

Usage:     This code depends on the numpy
           This code is compatible with python 3.8.x.

Examples:  python -m pytdnerf train --scene data/lego --steps 10000 --out runs/lego
           python -m pytdnerf federate --scene data/lego --clients 4 --partition non-iid --payload params-only
           python -m pytdnerf eval --checkpoint runs/lego/final.tdnf --scene data/lego --split test

"""

import argparse
import logging
import os
import sys

from pytdnerf.config import KEYS, RunConfig, format_value
from pytdnerf.errors import ConfigError, ContractError, TdnError
from pytdnerf.pybudget.footprint import SceneSpec, default_mlp_dims, memory_footprint, reduction, \
    reference_reports
from pytdnerf.pybudget.sweep import grid_points, sweep
from pytdnerf.pycheck.rcheck import RCheck
from pytdnerf.pydata.partition import partition
from pytdnerf.pydata.scene import load_scene
from pytdnerf.pyfed.federation import payload_bytes, run_federation
from pytdnerf.pyfield.field import FieldModel
from pytdnerf.pyplot.plot_curves import CurvePlotter
from pytdnerf.pyproduct.file import TdnfFile, load_checkpoint
from pytdnerf.pyproduct.image import save_png
from pytdnerf.pyproduct.report import write_csv
from pytdnerf.pyrender.occupancy import OccupancyGrid
from pytdnerf.pyrender.render import render_image
from pytdnerf.pytrain.evaluate import evaluate_split
from pytdnerf.pytrain.trainer import train

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"
COMMANDS = ("train", "render", "eval", "federate", "sweep", "partition", "budget", "export", "check")
EVAL_COLUMNS = ["frame", "psnr", "ssim", "samples_per_pixel", "tiles", "elapsed_ms"]


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", dest="config_file", default=None, help="key=value configuration file")
    common.add_argument("--verbose", "-v", action="store_true", help="debug logging")
    common.add_argument("--quiet", "-q", action="store_true", help="warnings only, no progress bars")
    for key, spec in KEYS.items():
        flags = ["--" + key]
        if "_" in key:
            flags.append("--" + key.replace("_", "-"))
        extra = dict(nargs="?", const="true") if isinstance(spec.default, bool) else {}
        common.add_argument(*flags, dest=key, default=argparse.SUPPRESS, metavar=key.upper(),
                            help="{} (default {})".format(spec.help, format_value(spec.default)), **extra)
    # spellings used in the docs
    common.add_argument("--n-clients", dest="clients", default=argparse.SUPPRESS, help=argparse.SUPPRESS)
    common.add_argument("--payload-mode", dest="payload", default=argparse.SUPPRESS, help=argparse.SUPPRESS)
    common.add_argument("--partition-mode", dest="partition", default=argparse.SUPPRESS, help=argparse.SUPPRESS)

    parser = argparse.ArgumentParser(prog="pytdnerf", description="tiny hash-encoded NeRF training, "
                                                                  "federated simulation and budget analysis")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    helps = {"train": "train one scene", "render": "render one frame or a split from a checkpoint",
             "eval": "score a checkpoint on a split", "federate": "simulate federated training",
             "sweep": "(B, T) sweep with budget and quality", "partition": "write a client partition plan",
             "budget": "print memory / ops budgets", "export": "convert a checkpoint to hdf5",
             "check": "report installed dependency groups"}
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=helps[name])
    return parser


def setup_logging(verbose=False, quiet=False):
    level = logging.DEBUG if verbose else (logging.WARNING if quiet else logging.INFO)
    logging.basicConfig(level=level, format=LOG_FORMAT)
    logging.getLogger().setLevel(level)


def _overrides(args):
    return {k: getattr(args, k) for k in KEYS if hasattr(args, k)}


def _load_scene(cfg):
    return load_scene(cfg.require("scene"), target_resolution=cfg["resolution"], channels=cfg["channels"],
                      background=cfg.scene_background())


def _load_model(cfg):
    ckpt = load_checkpoint(cfg.require("checkpoint"))
    grid = ckpt.occupancy if ckpt.occupancy is not None else OccupancyGrid()
    return ckpt, grid


def cmd_train(cfg, verbose):
    scene = _load_scene(cfg)
    out = cfg["out"]
    cfg.echo(out)
    result = train(scene, cfg.train_config(verbose), out_dir=out, grid_config=cfg.grid_config(),
                   precision_mode=cfg["precision"])
    ev = evaluate_split(result.model, result.occupancy, scene, max_frames=cfg["max_frames"],
                        frame_ids=None if scene.test_ids else scene.train_ids)
    write_csv(ev.rows, os.path.join(out, "eval.csv"), columns=EVAL_COLUMNS)
    CurvePlotter().plot_train_log(os.path.join(out, "train_log.csv"),
                                  save_dict=dict(fname=os.path.join(out, "train_log.png")))
    print("final: psnr {:.2f} dB, ssim {:.4f}, {:.1f} samples/pixel".format(
        ev.mean_psnr, ev.mean_ssim, ev.mean_samples_per_pixel))
    return 0


def cmd_render(cfg, verbose):
    cfg.echo(cfg["out"])
    scene = _load_scene(cfg)
    ckpt, grid = _load_model(cfg)
    frames = [cfg["frame"]] if cfg["frame"] is not None else scene.frame_ids(cfg["split"])
    for frame in frames:
        if not 0 <= frame < len(scene.cameras):
            raise ContractError("frame {} out of range 0..{}".format(frame, len(scene.cameras) - 1))
        image, stats = render_image(ckpt.model, grid, scene.cameras[frame], background=ckpt.meta["background"],
                                    bounds=scene.bounds)
        path = save_png(image, os.path.join(cfg["out"], "renders", "frame_{:03d}.png".format(frame)))
        print("{}: {:.1f} samples/pixel, {} tiles, {:.0f} ms".format(
            path, stats.mean_samples_per_pixel, stats.tiles, stats.elapsed_ms))
    return 0


def cmd_eval(cfg, verbose):
    cfg.echo(cfg["out"])
    scene = _load_scene(cfg)
    ckpt, grid = _load_model(cfg)
    ev = evaluate_split(ckpt.model, grid, scene, split=cfg["split"], max_frames=cfg["max_frames"],
                        background=ckpt.meta["background"], verbose=verbose)
    path = write_csv(ev.rows, os.path.join(cfg["out"], "eval_{}.csv".format(cfg["split"])), columns=EVAL_COLUMNS)
    print("{} frames of {}: psnr {:.2f} dB, ssim {:.4f} ({})".format(len(ev.rows), cfg["split"], ev.mean_psnr,
                                                                     ev.mean_ssim, path))
    return 0


def cmd_federate(cfg, verbose):
    scene = _load_scene(cfg)
    out = cfg["out"]
    cfg.echo(out)
    result = run_federation(scene, cfg.train_config(False), cfg.fed_config(verbose), out_dir=out,
                            grid_config=cfg.grid_config(), precision_mode=cfg["precision"])
    CurvePlotter().plot_federation(os.path.join(out, "federation.csv"),
                                   save_dict=dict(fname=os.path.join(out, "federation.png")))
    print("global psnr {:.2f} dB after {} rounds; {} bytes, {:.2f} s on the link".format(
        result.curve()[-1], cfg["rounds"], result.ledger.total_bytes, result.ledger.total_seconds))
    return 0


def cmd_sweep(cfg, verbose):
    scene = _load_scene(cfg)
    out = cfg["out"]
    cfg.echo(out)
    points = grid_points(cfg["sweep_batches"], cfg["sweep_tables"], cfg["img_per_step"], cfg["sweep_resolution"])
    rows = sweep(points, scene, cfg.train_config(False), steps=cfg["sweep_steps"], runs=cfg["sweep_runs"],
                 eval_frames=cfg["eval_frames"], threads=cfg["threads"], out_dir=out,
                 precision_mode=cfg["precision"], budget_precision=cfg["budget_precision"])
    CurvePlotter().plot_pareto(os.path.join(out, "sweep.csv"), save_dict=dict(fname=os.path.join(out, "pareto.png")))
    for row in rows:
        print("B={:>6d} T=2^{:<2d} {:>9.2f} MB  psnr {:.2f}{}".format(
            row["B"], row["T_log2"], row["mem_bytes_total"] / 1e6, row["psnr"], "  *" if row["selected"] else ""))
    return 0


def cmd_partition(cfg, verbose):
    cfg.echo(cfg["out"])
    scene = _load_scene(cfg)
    plan = partition(scene, cfg["clients"], cfg["partition"], cfg["seed"])
    path = plan.write(os.path.join(cfg["out"], "partition.txt"))
    print("{} ({}): client sizes {}".format(path, plan.mode, plan.sizes()))
    return 0


def cmd_budget(cfg, verbose):
    cfg.echo(cfg["out"])
    grid_config = cfg.grid_config()
    spec = SceneSpec(frames=100, width=cfg["resolution"], height=cfg["resolution"], channels=cfg["channels"])
    current = memory_footprint(grid_config, default_mlp_dims(grid_config, cfg["channels"]), cfg["batch"], spec,
                               cfg["budget_precision"], cfg["img_per_step"], cfg["occ_resolution"], name="current")
    reports = reference_reports(cfg["budget_precision"]) + [current]
    for report in reports:
        print("\n".join(report.lines()))
    print("selected vs baseline: {:.1%} less memory".format(reduction(reports[0], reports[1])))
    for mode in ("params_only", "with_grid"):
        size = payload_bytes(FieldModel(grid_config, channels=cfg["channels"]), mode, cfg["occ_resolution"])
        print("payload {}: {} bytes, {:.2f} s per round at {} clients".format(
            mode, size, 2 * cfg["clients"] * size * 8 / cfg["bandwidth"], cfg["clients"]))
    write_csv([r.as_row() for r in reports], os.path.join(cfg["out"], "budget.csv"))
    return 0


def cmd_export(cfg, verbose):
    source = cfg.require("checkpoint")
    target = cfg["hdf5"] or os.path.join(cfg["out"], os.path.splitext(os.path.basename(source))[0] + ".h5")
    cfg.echo(os.path.dirname(os.path.abspath(target)))
    TdnfFile().tran_tdnf2hdf5(source, target)
    print(target)
    return 0


def cmd_check(cfg, verbose):
    checker = RCheck()
    print(checker.help())
    result = 0
    for num, (name, _) in enumerate(checker.groups):
        report = checker.check(num)
        print("{:<9s} {}".format(name, ", ".join("{}: {}".format(m, s) for m, s in report)))
        if num == 0 and not checker.is_ok(0):
            result = 1
    return result


HANDLERS = {"train": cmd_train, "render": cmd_render, "eval": cmd_eval, "federate": cmd_federate,
            "sweep": cmd_sweep, "partition": cmd_partition, "budget": cmd_budget, "export": cmd_export,
            "check": cmd_check}


def main(argv=None):
    """
    :param argv: arguments without the program name, sys.argv[1:] when None
    :return: exit status
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    if not args.command:
        parser.print_usage(sys.stderr)
        return 2
    setup_logging(args.verbose, args.quiet)
    try:
        cfg = RunConfig.from_sources(args.config_file, _overrides(args))
        return HANDLERS[args.command](cfg, not args.quiet)
    except ConfigError as e:
        print("pytdnerf {}: configuration error: {}".format(args.command, e), file=sys.stderr)
        return 2
    except (TdnError, OSError) as e:
        print("pytdnerf {}: {}".format(args.command, e), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
