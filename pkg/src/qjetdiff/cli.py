"""Command line driver: ``qjetdiff <command> [options]``.

Exit codes: 0 success, 1 usage error, 2 data error (unreadable or corrupt
files, failed numerics). Every command accepts ``--config FILE``, a TOML file
of ``key = value`` pairs named like the long options (dashes become
underscores); flags given on the command line win.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys

import numpy as np

from . import jetio, training
from .denoiser import CheckpointError, load_checkpoint, save_checkpoint
from .qlinalg import LinAlgError

try:
    import tomllib
except ImportError:  # Python < 3.11
    import tomli as tomllib

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _non_negative_int(text):
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {value}")
    return value


def _positive_float(text):
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError(f"must be > 0, got {value}")
    return value


def build_parser():
    parser = _Parser(prog="qjetdiff", description="Quantum/hybrid/classical diffusion for sparse jet images.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser, metavar="COMMAND")
    sub.required = True
    cmds = {}

    p = cmds["gen-data"] = sub.add_parser("gen-data", help="write a synthetic sparse-jet dataset")
    defaults = jetio.SyntheticJetConfig()
    p.add_argument("--count", type=_positive_int, default=defaults.count)
    p.add_argument("--size", type=_positive_int, default=defaults.size)
    p.add_argument("--blobs-min", type=_non_negative_int, default=defaults.blobs_min)
    p.add_argument("--blobs-max", type=_non_negative_int, default=defaults.blobs_max)
    p.add_argument("--sigma", type=_positive_float, default=defaults.sigma)
    p.add_argument("--rate", type=_positive_float, default=defaults.rate)
    p.add_argument("--seed", type=int, default=defaults.seed)
    p.add_argument("--out", default="jets.qjet")

    p = cmds["train"] = sub.add_parser("train", help="train a denoiser; writes model.qdmw and metrics.csv")
    cfg = training.TrainConfig()
    p.add_argument("--data", default=None, help="QJET dataset (default: the default synthetic set)")
    p.add_argument("--model", choices=["classical", "hybrid", "quantum"], default=cfg.model)
    p.add_argument("--layers", type=_positive_int, default=cfg.layers)
    p.add_argument("--epochs", type=_positive_int, default=cfg.epochs)
    p.add_argument("--batch-size", type=_positive_int, default=cfg.batch_size)
    p.add_argument("--lr", type=_positive_float, default=cfg.learning_rate)
    p.add_argument("--seed", type=int, default=cfg.seed)
    p.add_argument("--forward", choices=["quantum", "classical"], default=cfg.forward)
    p.add_argument("--scramble", choices=["single", "fractional"], default=cfg.scramble)
    p.add_argument("--T", type=_positive_int, default=cfg.T, dest="T")
    p.add_argument("--beta-start", type=_positive_float, default=cfg.beta_start)
    p.add_argument("--beta-end", type=_positive_float, default=cfg.beta_end)
    p.add_argument("--holdout", type=_positive_float, default=cfg.holdout)
    p.add_argument("--refine", type=_positive_int, default=cfg.refine)
    p.add_argument("--eval-samples", type=_positive_int, default=None)
    p.add_argument("--out", default="run", help="output directory")

    p = cmds["sample"] = sub.add_parser("sample", help="generate images from a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--count", type=_positive_int, default=16)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--refine", type=_positive_int, default=1)
    p.add_argument("--size", type=_positive_int, default=16)
    p.add_argument("--forward", choices=["quantum", "classical"], default="quantum")
    p.add_argument("--out", default="samples", help="output directory")

    p = cmds["evaluate"] = sub.add_parser("evaluate", help="FID between two datasets")
    p.add_argument("real")
    p.add_argument("generated")

    p = cmds["plot"] = sub.add_parser("plot", help="SVG charts of loss and FID from metrics.csv")
    p.add_argument("metrics")
    p.add_argument("--out", default=".", help="output directory")

    p = cmds["postprocess"] = sub.add_parser("postprocess", help="keep the k most prominent pixels per image")
    p.add_argument("data")
    p.add_argument("--k", type=_non_negative_int, required=True)
    p.add_argument("--out", required=True)

    for p in cmds.values():
        p.add_argument("--config", default=None, help="TOML file of option defaults")
    return parser, cmds


def _apply_config(parser, cmds, argv, args):
    sub = cmds[args.command]
    try:
        with open(args.config, "rb") as fh:
            values = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise UsageError(f"{args.config}: {exc}") from exc
    actions = {a.dest: a for a in sub._actions if a.dest not in ("help", "config")}
    defaults = {}
    for key, value in values.items():
        dest = key.replace("-", "_")
        action = actions.get(dest)
        if action is None:
            raise UsageError(f"{args.config}: unknown option {key!r}")
        if action.type is not None:
            try:
                value = action.type(str(value))
            except (argparse.ArgumentTypeError, ValueError) as exc:
                raise UsageError(f"{args.config}: {key}: {exc}") from exc
        if action.choices is not None and value not in action.choices:
            raise UsageError(f"{args.config}: {key}: expected one of {', '.join(action.choices)}")
        defaults[dest] = value
    # flags on the command line still override these
    sub.set_defaults(**defaults)
    return parser.parse_args(argv)


def cmd_gen_data(args):
    if args.size % 2:
        raise UsageError("--size must be even")
    if args.blobs_min > args.blobs_max:
        raise UsageError("--blobs-min must not exceed --blobs-max")
    cfg = jetio.SyntheticJetConfig(count=args.count, size=args.size, blobs_min=args.blobs_min,
                                   blobs_max=args.blobs_max, sigma=args.sigma, rate=args.rate, seed=args.seed)
    images = jetio.synth_jets(cfg)
    jetio.write_dataset(args.out, images)
    print(f"wrote {len(images)} images of {cfg.size}x{cfg.size} to {args.out} "
          f"(sparsity {jetio.sparsity(images):.3f})")


def cmd_train(args):
    if not args.holdout < 1:
        raise UsageError("--holdout must be below 1")
    if args.beta_start > args.beta_end or args.beta_end >= 1:
        raise UsageError("need 0 < --beta-start <= --beta-end < 1")
    cfg = training.TrainConfig(
        epochs=args.epochs, batch_size=args.batch_size, learning_rate=args.lr, seed=args.seed,
        model=args.model, layers=args.layers, forward=args.forward, scramble=args.scramble, T=args.T,
        beta_start=args.beta_start, beta_end=args.beta_end, holdout=args.holdout, refine=args.refine,
        eval_samples=args.eval_samples, data=args.data)
    if cfg.data is None:
        images = jetio.synth_jets(jetio.SyntheticJetConfig())
    else:
        images = jetio.read_dataset(cfg.data)
    h, w = images.shape[1:]
    if h % 2 or w % 2 or ((h // 2) * (w // 2)) % 4:
        raise jetio.DatasetError(f"{h}x{w} images cannot be split into four channels of 4-pixel groups")
    os.makedirs(args.out, exist_ok=True)
    result = training.train(cfg, images)
    training.write_metrics_csv(os.path.join(args.out, "metrics.csv"), result.metrics)
    save_checkpoint(os.path.join(args.out, "model.qdmw"), result.model)
    last = result.metrics[-1]
    print(f"{cfg.model}: epoch {last.epoch} loss {last.loss:.6f} fid {last.fid:.6f} "
          f"(untrained fid {result.initial_fid:.6f}); wrote {args.out}/metrics.csv, {args.out}/model.qdmw")


def cmd_sample(args):
    if args.size % 4:
        raise UsageError("--size must be a multiple of 4")
    model = load_checkpoint(args.checkpoint)
    rng = np.random.Generator(np.random.PCG64(args.seed))
    images = training.generate(model, args.count, rng, (args.size, args.size), args.refine, args.forward)
    os.makedirs(args.out, exist_ok=True)
    for i, img in enumerate(images):
        jetio.write_pgm(os.path.join(args.out, f"sample_{i:04d}.pgm"), img)
    jetio.write_dataset(os.path.join(args.out, "samples.qjet"), images)
    print(f"wrote {len(images)} samples to {args.out}")


def cmd_evaluate(args):
    real = jetio.read_dataset(args.real)
    gen = jetio.read_dataset(args.generated)
    if real.shape[1:] != gen.shape[1:]:
        raise jetio.DatasetError(f"image sizes differ: {real.shape[1:]} vs {gen.shape[1:]}")
    if len(real) < 2 or len(gen) < 2:
        raise jetio.DatasetError("FID needs at least 2 images per dataset")
    print(f"{training.fid(real, gen):.6f}")


def _line_chart(path, epochs, values, ylabel, title):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    with matplotlib.rc_context({"svg.hashsalt": "qjetdiff", "svg.fonttype": "path"}):
        fig, ax = plt.subplots(figsize=(5, 3.5))
        ax.plot(epochs, values, marker="o", markersize=3)
        ax.set_xlabel("epoch")
        ax.set_ylabel(ylabel)
        ax.set_title(title)
        ax.grid(alpha=0.3)
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None, "Creator": None})
        plt.close(fig)


def cmd_plot(args):
    records = training.read_metrics_csv(args.metrics)
    if not records:
        raise jetio.DatasetError(f"{args.metrics} has no rows")
    os.makedirs(args.out, exist_ok=True)
    epochs = [r.epoch for r in records]
    _line_chart(os.path.join(args.out, "loss.svg"), epochs, [r.loss for r in records], "MSE loss", "Training loss")
    _line_chart(os.path.join(args.out, "fid.svg"), epochs, [r.fid for r in records], "FID", "FID vs held-out")
    print(f"wrote {args.out}/loss.svg, {args.out}/fid.svg")


def cmd_postprocess(args):
    images = jetio.read_dataset(args.data)
    out = np.stack([training.prominence_filter(img, args.k) for img in images]) if len(images) else images
    jetio.write_dataset(args.out, out)
    print(f"wrote {len(out)} filtered images to {args.out}")


COMMANDS = {
    "gen-data": cmd_gen_data,
    "train": cmd_train,
    "sample": cmd_sample,
    "evaluate": cmd_evaluate,
    "plot": cmd_plot,
    "postprocess": cmd_postprocess,
}


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    parser, cmds = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        if args.config:
            try:
                args = _apply_config(parser, cmds, argv, args)
            except SystemExit as exc:
                return exc.code if isinstance(exc.code, int) else EXIT_USAGE
        COMMANDS[args.command](args)
    except UsageError as exc:
        cmds[args.command].print_usage(sys.stderr)
        print(f"qjetdiff {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, jetio.DatasetError, CheckpointError, LinAlgError, training.TrainingError) as exc:
        print(f"qjetdiff {args.command}: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
