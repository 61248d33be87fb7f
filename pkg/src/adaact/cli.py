"""Command-line entry point ``adaact-kit``.

    adaact-kit train -c cfg.toml --out metrics.csv [--seed N]
    adaact-kit stability -c cfg.toml [--replace-index I] [--out pair.csv]
    adaact-kit report --in metrics.csv

Exit codes: 0 ok, 2 config error, 3 data/format error, 4 divergence.
"""

from __future__ import annotations

import argparse
import sys

from .config import load_config
from .diagnostics import read_metrics_csv
from .errors import ConfigError, DivergenceError, FormatError, ParameterError
from .experiment import run_stability_pair, run_train, variance_report

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_DIVERGED = 0, 2, 3, 4


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="adaact-kit", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", help="train one model and write per-step metrics")
    t.add_argument("-c", "--config", required=True)
    t.add_argument("--out", help="metrics CSV path (overrides run.out)")
    t.add_argument("--seed", type=int, help="overrides run.seed")

    s = sub.add_parser("stability", help="paired runs on neighbouring datasets")
    s.add_argument("-c", "--config", required=True)
    s.add_argument("--replace-index", type=int)
    s.add_argument("--out")
    s.add_argument("--seed", type=int)

    r = sub.add_parser("report", help="summarise averaged activation variance from a metrics CSV")
    r.add_argument("--in", dest="path", required=True)
    return p


def _overrides(args) -> dict:
    out = {}
    if getattr(args, "seed", None) is not None:
        out["run.seed"] = args.seed
    if getattr(args, "out", None) is not None:
        out["run.out"] = args.out
    if getattr(args, "replace_index", None) is not None:
        out["run.replace_index"] = args.replace_index
    return out


def _print_report(summary: dict) -> None:
    print(f"steps: {summary['steps']}")
    for i, v in enumerate(summary["layers"]):
        print(f"actvar_L{i}: {v!r}")
    print(f"mean: {summary['mean']!r}")


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.command == "report":
            try:
                records = read_metrics_csv(args.path)
            except (OSError, KeyError, ValueError) as exc:
                raise FormatError(f"cannot read metrics {args.path}: {exc}") from None
            _print_report(variance_report(records))
            return EXIT_OK
        overrides = _overrides(args)
        if args.command == "stability":
            overrides.setdefault("run.mode", "stability-pair")
        cfg = load_config(args.config, overrides)
        if cfg.mode == "stability-pair":
            result = run_stability_pair(cfg)
        else:
            result = run_train(cfg)
            if cfg.mode == "variance-report":
                _print_report(variance_report(result.records))
        last = result.records[-1] if result.records else None
        if last is not None:
            print(f"step {last.step} loss {last.loss:.6g}", file=sys.stderr)
        return EXIT_OK
    except ConfigError as exc:
        where = f" [{exc.field}]" if exc.field else ""
        print(f"config error{where}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (FormatError, ParameterError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except DivergenceError as exc:
        print(f"diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED


if __name__ == "__main__":
    sys.exit(main())
