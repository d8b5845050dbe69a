"""Command-line interface for the scan-to-skeleton translator.

Two subcommands: `train` fits the generator/discriminator pair on a
directory of <stem>.scan.png / <stem>.skel.png pairs and writes a
checkpoint plus loss history; `export` runs a trained checkpoint over
a directory of scans and writes one skeleton PNG per scan.  Exit
codes: 0 on success, 1 for usage errors, 2 for unreadable or invalid
data files.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .infer import export_skeletons
from .model import SkelganError, TrainConfig
from .train import ModelCheckpoint, train, write_history


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse variant that defers error handling to run()."""

    def error(self, message):
        raise UsageError(f"{self.prog}: {message}\n{self.format_usage()}")


def build_parser() -> _Parser:
    parser = _Parser(prog="skelgan", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train on a scan/skeleton pair directory")
    p_train.add_argument("--pairs", required=True, help="directory of image pairs")
    p_train.add_argument("--out", required=True, help="checkpoint output directory")
    p_train.add_argument("--layers", type=int, default=3,
                         help="discriminator depth, 3..6")
    p_train.add_argument("--epochs", type=int, default=5)
    p_train.add_argument("--batch-size", type=int, default=4)
    p_train.add_argument("--lambda-l1", type=float, default=100.0)
    p_train.add_argument("--lr", type=float, default=0.001)
    p_train.add_argument("--image-size", type=int, default=256)
    p_train.add_argument("--base-channels", type=int, default=32)
    p_train.add_argument("--seed", type=int, required=True)

    p_exp = sub.add_parser("export", help="write skeletons for a scan directory")
    p_exp.add_argument("--ckpt", required=True, help="checkpoint file or directory")
    p_exp.add_argument("--scans", required=True, help="directory of scan images")
    p_exp.add_argument("--out", required=True, help="skeleton output directory")
    p_exp.add_argument("--seed", type=int, required=True)
    return parser


def _cmd_train(args) -> int:
    cfg = TrainConfig(image_size=args.image_size, lambda_l1=args.lambda_l1,
                      learning_rate=args.lr, discriminator_layers=args.layers,
                      epochs=args.epochs, batch_size=args.batch_size,
                      base_channels=args.base_channels, seed=args.seed)

    def report(stats) -> None:
        print(f"epoch {stats.epoch}: d_loss {stats.d_loss:.4f} "
              f"g_adv {stats.g_adv:.4f} g_l1 {stats.g_l1:.4f}")

    checkpoint, history = train(args.pairs, cfg, progress=report)
    out = Path(args.out)
    target = checkpoint.save(out)
    write_history(history, target.parent / "history.csv")
    return 0


def _cmd_export(args) -> int:
    checkpoint = ModelCheckpoint.load(args.ckpt)
    count = export_skeletons(checkpoint, args.scans, args.out, args.seed)
    print(f"wrote {count} skeletons to {args.out}")
    return 0


_COMMANDS = {"train": _cmd_train, "export": _cmd_export}


def run(argv=None) -> int:
    """Entry point returning an exit code instead of raising SystemExit."""
    if argv is None:
        argv = sys.argv[1:]
    try:
        args = build_parser().parse_args(list(argv))
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except (SkelganError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
