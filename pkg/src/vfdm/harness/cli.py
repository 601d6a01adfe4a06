"""Command line entry point.

Exit codes: 0 success, 2 invalid configuration, 3 more than 1% of trials
failed numerically.
"""

from __future__ import annotations

import argparse
import logging
import sys

from ..errors import InvalidConfigError
from .config import load_config, make_config
from .experiments import failure_rate, run_experiment
from .report import write_outputs

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

SUBCOMMANDS = {
    "rate-vs-snr": "rate_vs_snr",
    "target-sweep": "target_rate_sweep",
    "rank-sweep": "rank_vs_l",
    "trial": "single_trial",
}


def _floats(text):
    return [float(v) for v in text.split(",") if v.strip()]


def _ints(text):
    out = []
    for part in text.split(","):
        part = part.strip()
        if ":" in part:
            lo, hi = part.split(":")
            out.extend(range(int(lo), int(hi) + 1))
        elif part:
            out.append(int(part))
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vfdm", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="flat key: value config file")
        p.add_argument("--seed", type=int)
        p.add_argument("--trials", type=int)
        p.add_argument("--out", help="output path (stdout if omitted)")
        p.add_argument("--mode", choices=["exact", "unit-modulus", "fft-columns"])
        p.add_argument("--column-scaling", choices=["unit", "none"])
        p.add_argument("--svd-tol", type=float, dest="svd_rel_tol")
        p.add_argument("--rank-tol", type=float)
        p.add_argument("--bandwidth-hz", type=float)
        p.add_argument("--threads", type=int)
        p.add_argument("--n-carriers", type=int)
        p.add_argument("--cp-len", type=int)
        p.add_argument("--sigma12", type=float)
        p.add_argument("--snr-db", type=float, help="sets P1 = P2")
        p.add_argument("--snr-grid", type=_floats, help="comma-separated dB values")
        p.add_argument("--targets", type=_floats, help="comma-separated target rates")
        p.add_argument("--l-grid", type=_ints, help="e.g. 1:32 or 2,4,8")
        p.add_argument("--aspect-ratio", type=float)
        p.add_argument("--oracle-every", type=int)
        p.add_argument("--plot", action="store_true", default=None,
                       help="also render a PNG next to the CSV")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    overrides = dict(
        kind=SUBCOMMANDS[args.command], master_seed=args.seed, trials=args.trials,
        output_path=args.out, precoder_mode=args.mode,
        column_scaling=args.column_scaling, svd_rel_tol=args.svd_rel_tol,
        rank_tol=args.rank_tol, bandwidth_hz=args.bandwidth_hz, threads=args.threads,
        n_carriers=args.n_carriers, cp_len=args.cp_len, sigma12=args.sigma12,
        snr_db=args.snr_db, snr_grid_db=args.snr_grid, target_grid=args.targets,
        l_grid=args.l_grid, aspect_ratio=args.aspect_ratio,
        oracle_every=args.oracle_every, plot=args.plot,
    )
    try:
        if args.config:
            config = load_config(args.config, **overrides)
        else:
            config = make_config(**overrides)
    except InvalidConfigError as exc:
        print(f"vfdm: invalid config: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    result = run_experiment(config)
    text = write_outputs(result, config, config.output_path, config.plot)
    if config.output_path is None:
        sys.stdout.write(text)

    if not isinstance(result, dict):
        rate = failure_rate(result)
        if rate > 0.01:
            print(f"vfdm: {rate:.2%} of trials failed numerically", file=sys.stderr)
            return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
