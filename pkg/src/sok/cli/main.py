"""Command-line entry point.

Every subcommand reads optional defaults from an INI file (``--config``),
section named after the subcommand, keys spelled like the long flags
(``k-max`` or ``k_max``). Explicit flags win over the file. The seed falls
back to the ``SOK_SEED`` environment variable, then 0.

Exit codes: 0 success, 1 numerical or validation failure, 2 usage or I/O error.
"""

from __future__ import annotations

import argparse
import configparser
import os
import shlex
import sys

import numpy as np

from ..data.downsample import DownsampleStrategy
from ..data.generate import PROBLEMS
from ..errors import FormatError
from ..extension import ExtensionMethod
from ..fno.config import Activation, Factorization, Norm, SkipKind
from ..train.balancers import BalanceMethod
from ..train.ifno import IfnoCriterion
from ..train.losses import LossKind
from ..train.optim import SCHEDULES
from . import commands

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    """Bad invocation detected after argument parsing."""


def _values(enum_cls) -> list[str]:
    return [m.value for m in enum_cls]


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="INI file with a section named after the subcommand")
    p.add_argument("--seed", type=int, default=None, help="random seed (default: $SOK_SEED or 0)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sok", description="Spectral operator learning toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a benchmark dataset")
    _add_common(p)
    p.add_argument("--problem", choices=PROBLEMS, default="heat")
    p.add_argument("--n", type=int, default=200, help="number of samples")
    p.add_argument("--res", type=int, default=64, help="points per axis")
    p.add_argument("--nu", type=float, default=0.05)
    p.add_argument("--t", type=float, default=1.0, help="final time (heat, burgers)")
    p.add_argument("--dt", type=float, default=1e-3, help="time step (burgers)")
    p.add_argument("--k-max", type=int, default=16, help="highest mode of the random inputs")
    p.add_argument("--gamma", type=float, default=2.0, help="spectral decay exponent")
    p.add_argument("--amplitude", type=float, default=1.0)
    p.add_argument("--domain-length", type=float, default=2 * np.pi)
    p.add_argument("--start-index", type=int, default=0, help="index of the first sample stream")
    p.add_argument("--downsample", choices=_values(DownsampleStrategy), default=None)
    p.add_argument("--factor", type=int, default=1, help="downsampling factor")
    p.add_argument("--stats-from", default=None, help="copy normalization statistics from this dataset")
    p.add_argument("--float32", action="store_true", help="store the payload as float32")
    p.add_argument("-o", "--output", required=True)

    p = sub.add_parser("train", help="train an FNO on a dataset")
    _add_common(p)
    p.add_argument("--data", required=True)
    p.add_argument("--val", default=None, help="validation dataset")
    p.add_argument("--modes", default="12", help="retained modes per axis, comma separated")
    p.add_argument("--max-modes", default=None, help="allocated modes per axis (defaults to --modes)")
    p.add_argument("--width", type=int, default=16, help="hidden channels")
    p.add_argument("--layers", type=int, default=4)
    p.add_argument("--lifting-ratio", type=float, default=2.0)
    p.add_argument("--projection-ratio", type=float, default=2.0)
    p.add_argument("--mlp-expansion", type=float, default=0.5)
    p.add_argument("--skip", choices=_values(SkipKind), default="linear")
    p.add_argument("--mlp-skip", choices=_values(SkipKind), default="soft-gating")
    p.add_argument("--activation", choices=_values(Activation), default="gelu")
    p.add_argument("--norm", choices=_values(Norm), default="none")
    p.add_argument("--factorization", choices=_values(Factorization), default="dense")
    p.add_argument("--rank", type=float, default=1.0)
    p.add_argument("--separable", action="store_true")
    p.add_argument("--domain-padding", type=float, default=0.0)
    p.add_argument("--epochs", type=int, default=100)
    p.add_argument("--batch-size", type=int, default=20)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--optimizer", choices=("adam", "sgd"), default="adam")
    p.add_argument("--momentum", type=float, default=0.0)
    p.add_argument("--schedule", choices=SCHEDULES, default="cosine")
    p.add_argument("--step-size", type=int, default=100)
    p.add_argument("--decay", type=float, default=0.5, help="step-schedule decay factor")
    p.add_argument("--loss", default="lp-rel", help="comma-separated loss kinds: " + ", ".join(_values(LossKind)))
    p.add_argument("--p", type=float, default=2.0, help="exponent of Lp losses")
    p.add_argument("--balancer", choices=_values(BalanceMethod), default="fixed")
    p.add_argument("--tau", type=float, default=1.0)
    p.add_argument("--alpha", type=float, default=0.999)
    p.add_argument("--rho-prob", type=float, default=0.999)
    p.add_argument("--ifno", action="store_true", help="grow the active modes during training")
    p.add_argument("--ifno-criterion", choices=_values(IfnoCriterion), default="explained-ratio")
    p.add_argument("--ifno-start", type=int, default=2)
    p.add_argument("--ifno-alpha", type=float, default=0.99)
    p.add_argument("--ifno-window", type=int, default=10)
    p.add_argument("--ifno-eps", type=float, default=1e-3)
    p.add_argument("--ifno-every", type=int, default=1)
    p.add_argument("--history", default=None, help="history CSV (default: <output>.history.csv)")
    p.add_argument("-o", "--output", required=True, help="checkpoint path")

    p = sub.add_parser("eval", help="evaluate a checkpoint on a dataset")
    _add_common(p)
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--batch-size", type=int, default=None)
    p.add_argument("-o", "--output", required=True, help="metrics CSV")

    p = sub.add_parser("superres", help="zero-shot evaluation on a finer grid")
    _add_common(p)
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True, help="dataset at the evaluation resolution")
    p.add_argument("--coarse-res", type=int, default=None, help="reference resolution (default: training resolution)")
    p.add_argument("-o", "--output", required=True, help="report CSV")

    p = sub.add_parser("rollout", help="apply a model recursively")
    _add_common(p)
    p.add_argument("--model", required=True)
    p.add_argument("--u0", required=True, help="initial state (.npy, .fnod or text)")
    p.add_argument("--index", type=int, default=0, help="sample index when --u0 is a dataset")
    p.add_argument("--steps", type=int, default=10)
    p.add_argument("--residual", action="store_true", help="the model predicts increments")
    p.add_argument("--nu", type=float, default=None, help="heat reference viscosity (default: from training data)")
    p.add_argument("--dt", type=float, default=None, help="heat reference time per step (default: from training data)")
    p.add_argument("-o", "--output", required=True, help="trajectory .npy")
    p.add_argument("--errors", default=None, help="error CSV (default: <output>.errors.csv)")

    p = sub.add_parser("diagnose", help="spectral hygiene report for a dataset")
    _add_common(p)
    p.add_argument("--data", required=True)
    p.add_argument("--energy", type=float, default=0.999, help="energy share for the recommended n_modes")
    p.add_argument("--tail-tol", type=float, default=1e-10, help="tail energy share that raises the aliasing flag")
    p.add_argument("-o", "--output", required=True, help="per-mode power CSV")
    p.add_argument("--report", default=None, help="summary CSV (default: <output>.report.csv)")

    p = sub.add_parser("extend", help="periodic extension of a non-periodic signal")
    _add_common(p)
    p.add_argument("--input", default=None, help="signal file; omit to use the built-in exp(-x)+sin(3x) demo")
    p.add_argument("--n", type=int, default=128, help="demo signal length")
    p.add_argument("--spacing", type=float, default=None, help="sample spacing (default 1/n)")
    p.add_argument("--method", choices=_values(ExtensionMethod) + ["none"], default="fc-legendre")
    p.add_argument("--d", type=int, default=6, help="boundary stencil size")
    p.add_argument("--c", type=int, default=32, help="extension length")
    p.add_argument("--s", type=float, default=1.0, help="Sobolev order (spectrum-opt)")
    p.add_argument("--compare", action="store_true", help="compare derivatives against no extension")
    p.add_argument("--reference", default=None, help="exact derivative samples for --compare with --input")
    p.add_argument("-o", "--output", required=True, help="extended signal .npy")
    p.add_argument("--metrics", default=None, help="metrics CSV (default: <output>.metrics.csv)")

    p = sub.add_parser("report", help="SVG line plots from a CSV")
    _add_common(p)
    p.add_argument("--history", required=True, help="CSV with a header row")
    p.add_argument("--columns", default=None, help="comma-separated columns (default: all numeric)")
    p.add_argument("--x", default=None, help="x column (default: the first)")
    p.add_argument("--log", action="store_true", help="logarithmic y axis")
    p.add_argument("--title", default=None)
    p.add_argument("-o", "--output", required=True)
    return parser


def _config_defaults(sub: argparse.ArgumentParser, path: str, section: str) -> dict:
    cfg = configparser.ConfigParser()
    if not cfg.read(path):
        raise FileNotFoundError(f"config file {path} not found")
    if not cfg.has_section(section):
        return {}
    known = {a.dest: a for a in sub._actions}
    out = {}
    for key, raw in cfg.items(section):
        dest = key.replace("-", "_")
        if dest not in known or dest in ("config", "help"):
            raise UsageError(f"unknown key {key!r} in section [{section}] of {path}")
        action = known[dest]
        if isinstance(action, argparse._StoreTrueAction):
            out[dest] = cfg.getboolean(section, key)
        else:
            value = action.type(raw) if action.type else raw
            if action.choices is not None and value not in action.choices:
                raise UsageError(f"{key}={raw!r} is not one of {', '.join(map(str, action.choices))}")
            out[dest] = value
    return out


def _peek(argv: list[str]) -> tuple[str | None, str | None]:
    """Subcommand and --config value, read before full parsing."""
    command = next((a for a in argv if not a.startswith("-")), None)
    config = None
    for i, a in enumerate(argv):
        if a == "--config" and i + 1 < len(argv):
            config = argv[i + 1]
        elif a.startswith("--config="):
            config = a.split("=", 1)[1]
    return command, config


def parse(argv: list[str]) -> argparse.Namespace:
    parser = build_parser()
    command, config = _peek(argv)
    subparsers = parser._subparsers._group_actions[0].choices
    if config and command in subparsers:
        sub = subparsers[command]
        defaults = _config_defaults(sub, config, command)
        for action in sub._actions:
            if action.dest in defaults:
                action.required = False
        sub.set_defaults(**defaults)
    args = parser.parse_args(argv)
    if args.seed is None:
        env = os.environ.get("SOK_SEED")
        try:
            args.seed = int(env) if env not in (None, "") else 0
        except ValueError as exc:
            raise UsageError(f"SOK_SEED={env!r} is not an integer") from exc
    return args


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    invocation = "sok " + shlex.join(argv)
    try:
        args = parse(argv)
        return getattr(commands, f"cmd_{args.command}")(args, invocation) or EXIT_OK
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else EXIT_USAGE
    except (UsageError, FormatError, FileNotFoundError, IsADirectoryError, PermissionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
