"""``efie-hybrid`` command-line entry point."""

from __future__ import annotations

import argparse
import logging
import sys

from .experiments import EXIT_ERROR, KINDS, PipelineError, load_config, run
from .hybrid import INNER_SOLVERS, PRECONDITIONERS


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="efie-hybrid",
        description="EFIE scattering with a hybrid Krylov / quantum linear solver.")
    ap.add_argument("kind", choices=KINDS)
    ap.add_argument("--config", help="INI file; flags below override its values")
    ap.add_argument("--seed", type=int)
    ap.add_argument("--out", help="output directory")
    ap.add_argument("--inner", choices=INNER_SOLVERS)
    ap.add_argument("--precond", choices=PRECONDITIONERS)
    ap.add_argument("--noise", type=float, help="per-gate Pauli error probability")
    ap.add_argument("--workers", type=int)
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    overrides = {k: getattr(args, k) for k in
                 ("seed", "out", "inner", "precond", "noise", "workers")}
    try:
        cfg = load_config(args.config, kind=args.kind, **overrides)
    except Exception as exc:
        print(f"efie-hybrid: [config] {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    try:
        return run(cfg)
    except PipelineError as exc:
        print(f"efie-hybrid: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except Exception as exc:
        print(f"efie-hybrid: [{args.kind}] {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
