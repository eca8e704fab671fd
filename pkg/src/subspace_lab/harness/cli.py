"""``subspace-lab <kind> --config FILE [--key value ...] --out DIR``

Exit status: 0 on success, 1 on a configuration error, 2 when a run diverges
or fails numerically.
"""

from __future__ import annotations

import argparse
import sys

from ..geometry import RankDeficiencyError
from .config import KINDS, ConfigError, load
from .experiments import run

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2


def _parse(argv):
    parser = argparse.ArgumentParser(prog="subspace-lab", description="Subspace-learning GAN experiments.")
    parser.add_argument("kind", choices=KINDS)
    parser.add_argument("--config", help="flat key = value config file")
    parser.add_argument("--out", help="output directory")
    args, rest = parser.parse_known_args(argv)
    overrides = {}
    i = 0
    while i < len(rest):
        tok = rest[i]
        if not tok.startswith("--") or len(tok) < 3:
            raise ConfigError(f"unexpected argument {tok!r}")
        if "=" in tok:
            key, value = tok[2:].split("=", 1)
            i += 1
        else:
            if i + 1 >= len(rest):
                raise ConfigError(f"{tok[2:]}: missing value")
            key, value = tok[2:], rest[i + 1]
            i += 2
        overrides[key] = value
    if args.out is not None:
        overrides["out"] = args.out
    return args, overrides


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        args, overrides = _parse(argv)
        cfg = load(args.config, overrides, kind=args.kind)
        if not cfg.out:
            raise ConfigError("out: an output directory is required (--out DIR)")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SystemExit as exc:  # argparse usage errors
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        report = run(cfg)
    except (FloatingPointError, RankDeficiencyError, ArithmeticError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG if isinstance(exc, (FileNotFoundError, ConfigError)) else EXIT_RUNTIME
    for key, value in report.items():
        print(f"{key} = {value}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
