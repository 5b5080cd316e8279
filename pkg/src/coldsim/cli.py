"""``coldsim`` command line: states, fit, bounds, simulate, sweep."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

from coldsim.analytics import SingularChainError, lower_bound, upper_bound
from coldsim.carrier import fit_weibull
from coldsim.config import (
    ConfigError,
    ConfigFile,
    IngestError,
    emit_sweep_csv,
    ingest_exchange_log,
    parse_config,
)
from coldsim.simulation import SWEEP_AXES, outcomes_csv, run_batch, sweep
from coldsim.states import count_states, enumerate_states, enumerate_general, states_csv

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INGEST = 3
EXIT_NUMERIC = 4

SEED_ENV = "COLDSIM_SEED"


def _load(path: str) -> ConfigFile:
    cfg = parse_config(path)
    env_seed = os.environ.get(SEED_ENV)
    if env_seed is not None:
        try:
            seed = int(env_seed)
        except ValueError:
            raise ConfigError(f"{SEED_ENV}={env_seed!r} is not an integer") from None
        if not 0 <= seed < 2**64:
            raise ConfigError(f"{SEED_ENV} must be an unsigned 64-bit integer")
        cfg = replace(cfg, sim=replace(cfg.sim, seed=seed))
    return cfg


def _bounds(cfg: ConfigFile) -> tuple[float, float]:
    sim = cfg.sim
    space = enumerate_states(sim.n, sim.k)
    lb = lower_bound(sim.n, sim.k, sim.rates.lam, sim.eta, "exact")
    ub = upper_bound(space, sim.rates, sim.eta, "fundamental")
    return lb, ub


def cmd_states(args: argparse.Namespace) -> int:
    if args.s == 3:
        sys.stdout.write(states_csv(enumerate_states(args.n, args.k)))
    else:
        sys.stdout.write(enumerate_general(args.n, args.k, args.s))
    return EXIT_OK


def cmd_fit(args: argparse.Namespace) -> int:
    data = ingest_exchange_log(args.input)
    logging.info(
        "read %d exchange counts (min %g, max %g, mean %g)",
        data.count, data.minimum, data.maximum, data.mean,
    )
    params = fit_weibull(data.values)
    text = json.dumps(params.to_json_dict(), indent=2) + "\n"
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_bounds(args: argparse.Namespace) -> int:
    cfg = _load(args.config)
    lb, ub = _bounds(cfg)
    ub_lin = upper_bound(enumerate_states(cfg.sim.n, cfg.sim.k), cfg.sim.rates, cfg.sim.eta,
                         "linear_solve")
    out = {
        "lower_bound_hours": lb,
        "upper_bound_hours": ub,
        "ub_method": "fundamental",
        "upper_bound_linear_solve_hours": ub_lin,
        "n_states": count_states(cfg.sim.n, cfg.sim.k),
        "eta": cfg.sim.eta,
    }
    sys.stdout.write(json.dumps(out, indent=2) + "\n")
    return EXIT_OK


def cmd_simulate(args: argparse.Namespace) -> int:
    cfg = _load(args.config)
    summary = run_batch(cfg.sim, workers=args.workers)
    trials_csv = args.trials_csv or cfg.trials_csv
    if trials_csv:
        Path(trials_csv).write_text(outcomes_csv(summary.outcomes))
    lb, ub = _bounds(cfg)
    out = {
        "mode": cfg.sim.mode,
        "trials": summary.trials,
        "seed": cfg.sim.seed,
        "mttdl_hours": summary.mttdl,
        "mttdl_stderr": summary.mttdl_stderr,
        "mttdu_hours": summary.mttdu,
        "mttdu_stderr": summary.mttdu_stderr,
        "censored_fraction": summary.censored_fraction,
        "lower_bound_hours": lb,
        "upper_bound_hours": ub,
    }
    sys.stdout.write(json.dumps(out, indent=2) + "\n")
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    cfg = _load(args.config)
    axis = args.axis or cfg.sweep_axis
    if axis is None:
        raise ConfigError("no sweep axis given (--axis or sweep_axis)", key="sweep_axis")
    if args.grid:
        try:
            grid = [float(v) for v in args.grid.split(",") if v.strip()]
        except ValueError:
            raise ConfigError(f"bad --grid {args.grid!r}", key="sweep_grid") from None
    else:
        grid = list(cfg.sweep_grid)
    if not grid:
        raise ConfigError("empty sweep grid", key="sweep_grid")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ConfigError("sweep grid must be strictly increasing", key="sweep_grid")
    output = args.output or cfg.output
    if output is None:
        raise ConfigError("no output path (--output or output)", key="output")
    results = sweep(cfg.sim, axis, grid, workers=args.workers)
    lb, ub = _bounds(cfg)
    emit_sweep_csv(results, output, lb, ub)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="coldsim",
        description="Reliability and availability of carrier-assisted cold storage.",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("states", help="dump the Markov state space as CSV")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--s", type=int, default=3)
    p.set_defaults(func=cmd_states)

    p = sub.add_parser("fit", help="fit the swaps-before-failure Weibull from field data")
    p.add_argument("--input", required=True)
    p.add_argument("--output")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("bounds", help="analytic lower/upper MTTDL bounds")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("simulate", help="Monte Carlo MTTDL/MTTDU")
    p.add_argument("--config", required=True)
    p.add_argument("--trials-csv")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="Monte Carlo over a grid of one rate")
    p.add_argument("--config", required=True)
    p.add_argument("--axis", choices=sorted(SWEEP_AXES))
    p.add_argument("--grid", help="comma-separated, strictly increasing")
    p.add_argument("--output")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s: %(message)s",
    )
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except IngestError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INGEST
    except (SingularChainError, ArithmeticError, OverflowError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        # fit_weibull and state-space argument checks
        code = EXIT_INGEST if args.command == "fit" else EXIT_CONFIG
        print(f"error: {exc}", file=sys.stderr)
        return code


if __name__ == "__main__":
    sys.exit(main())
