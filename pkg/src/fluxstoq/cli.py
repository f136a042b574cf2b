"""Command-line entry point: ``fluxstoq run|validate|sweep --config FILE``."""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .circuit import CircuitError, MinimizationError
from .config import ConfigError, load_config, validate_config
from .experiments import run_experiment, run_sweep, write_outputs
from .pimc.stats import PimcError
from .qubits import ProjectionError
from .spectral import SpectralError

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2
# ValueError last: configuration problems are reported as ConfigError before this is consulted
NUMERICAL_ERRORS = (SpectralError, PimcError, MinimizationError, ProjectionError, CircuitError, FloatingPointError,
                    ValueError)


def _parser():
    p = argparse.ArgumentParser(prog="fluxstoq", description=__doc__)
    sub = p.add_subparsers(dest="verb", required=True)
    for verb, text in (("run", "execute the configured pipeline"), ("validate", "check a config without running it"),
                       ("sweep", "run the pipeline once per value of the [sweep] section")):
        s = sub.add_parser(verb, help=text)
        s.add_argument("--config", required=True, type=Path, help="experiment config file")
        if verb != "validate":
            s.add_argument("--seed", type=int, help="override experiment.seed")
            s.add_argument("--out", type=Path, default=Path("results"), help="output directory")
            s.add_argument("--chains", type=int, help="override experiment.n_chains")
            s.add_argument("--threads", type=int, default=1, help="worker threads for independent sweep points")
    return p


def _overrides(args):
    out = {}
    if args.seed is not None:
        out[("experiment", "seed")] = args.seed
    if args.chains is not None:
        out[("experiment", "n_chains")] = args.chains
    return out


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.verb == "validate":
            problems = validate_config(args.config)
            for d in problems:
                print(f"{args.config}: {d}", file=sys.stderr)
            if not problems:
                print(f"{args.config}: ok")
            return EXIT_CONFIG if problems else EXIT_OK
        if args.threads < 1:
            print("--threads must be >= 1", file=sys.stderr)
            return EXIT_CONFIG
        if args.verb == "run":
            spec = load_config(args.config, _overrides(args))
            report = run_experiment(spec, threads=args.threads)
            out = write_outputs(report, args.out)
            print(f"wrote {out / 'results.json'}")
        else:
            run_sweep(args.config, args.out, threads=args.threads, overrides=_overrides(args))
            print(f"wrote {args.out / 'sweep.json'}")
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConfigError as exc:
        for d in exc.diagnostics:
            print(f"{args.config}: {d}", file=sys.stderr)
        return EXIT_CONFIG
    except NUMERICAL_ERRORS as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
