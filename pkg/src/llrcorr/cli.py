"""Command-line entry point: ``llrcorr {saddlepoint,alpha-sweep,pep,ber}``.

Every subcommand writes CSV to stdout or ``--out``. ``--config FILE`` loads a
JSON object whose keys mirror the long flags (``snr_db`` or ``snr-db``);
values given on the command line take precedence.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from typing import Optional, Sequence

from .cgf import cgf_mismatched_llr, find_saddlepoint
from .correction import alpha_high_snr, alpha_low_snr
from .experiments import (
    BER_COLUMNS,
    LLR_MODES,
    METHODS,
    SWEEP_COLUMNS,
    BerConfig,
    SweepConfig,
    run_alpha_sweep,
    run_ber,
    write_csv,
)
from .llr import ChannelParams
from .pep import PepQuery, pep_all

SADDLEPOINT_COLUMNS = ("snr_db", "sir_db", "s_hat", "alpha", "alpha0", "alpha_inf")
PEP_COLUMNS = ("method", "value", "stderr")

# flags that must be supplied on the command line or in the config file
REQUIRED = {
    "saddlepoint": ("snr_db", "sir_db"),
    "alpha-sweep": ("snr_db", "sir_db"),
    "pep": ("d1", "d2", "alpha", "snr_db", "sir_db", "seed"),
    "ber": ("snr_db", "seed"),
}


def _octal_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(g, 8) for g in str(text).split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"invalid octal generator list {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="llrcorr", description="Corrected L-values for interference channels.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with flag values")
    common.add_argument("--out", help="write CSV here instead of stdout")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("saddlepoint", parents=[common], help="saddlepoint and correction factors at one point")
    sp.add_argument("--snr-db", type=float)
    sp.add_argument("--sir-db", type=float)

    sw = sub.add_parser("alpha-sweep", parents=[common], help="correction factors over an SNR x SIR grid")
    sw.add_argument("--snr-db", type=float, nargs="+")
    sw.add_argument("--sir-db", type=float, nargs="+")
    sw.add_argument("--methods", nargs="+", choices=METHODS, default=["saddlepoint", "gmi", "wlsf"])
    sw.add_argument("--quad-order", type=int, default=64)
    sw.add_argument("--d1", type=int, default=4, help="mismatched count for grid_2sm")
    sw.add_argument("--d2", type=int, default=4, help="matched count for grid_2sm")
    sw.add_argument("--gmi-fallback", action="store_true", help="use the saddlepoint factor for GMI above 15 dB")
    sw.add_argument("--seed", type=int, default=0)

    pp = sub.add_parser("pep", parents=[common], help="pairwise error probability by every method")
    pp.add_argument("--d1", type=int)
    pp.add_argument("--d2", type=int)
    pp.add_argument("--alpha", type=float)
    pp.add_argument("--snr-db", type=float)
    pp.add_argument("--sir-db", type=float)
    pp.add_argument("--seed", type=int)
    pp.add_argument("--samples", type=int, default=1_000_000, help="Monte Carlo trials")
    pp.add_argument("--workers", type=int, default=1)

    bp = sub.add_parser("ber", parents=[common], help="coded BER over Rayleigh fading")
    bp.add_argument("--snr-db", type=float, nargs="+")
    bp.add_argument("--llr-mode", choices=LLR_MODES, default="saddlepoint")
    bp.add_argument("--seed", type=int)
    bp.add_argument("--sir-db", type=float, default=6.0)
    bp.add_argument("--block-info-bits", type=int, default=1000)
    bp.add_argument("--generators", type=_octal_list, default=(0o15, 0o17), help="octal, comma separated")
    bp.add_argument("--constraint-length", type=int, default=4)
    bp.add_argument("--min-errors", type=int, default=200)
    bp.add_argument("--max-blocks", type=int, default=100_000)
    bp.add_argument("--chunk-blocks", type=int, default=100)
    bp.add_argument("--interference", choices=("fixed", "proportional", "rayleigh"), default="fixed")
    bp.add_argument("--workers", type=int, default=1)
    return parser


def _apply_config(parser: argparse.ArgumentParser, argv: Sequence[str], args: argparse.Namespace) -> argparse.Namespace:
    with open(args.config) as fh:
        cfg = json.load(fh)
    if not isinstance(cfg, dict):
        parser.error("config file must hold a JSON object")
    sub = parser._subparsers._group_actions[0].choices[args.command]
    known = {a.dest for a in sub._actions}
    defaults = {}
    for key, value in cfg.items():
        dest = key.replace("-", "_")
        if dest not in known or dest in ("config", "help"):
            sub.error(f"unknown config key {key!r}")
        if dest == "generators" and isinstance(value, str):
            value = _octal_list(value)
        defaults[dest] = value
    sub.set_defaults(**defaults)
    return parser.parse_args(argv)


def _parse(argv: Sequence[str]) -> tuple[argparse.ArgumentParser, argparse.Namespace]:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        args = _apply_config(parser, argv, args)
    sub = parser._subparsers._group_actions[0].choices[args.command]
    missing = [d for d in REQUIRED[args.command] if getattr(args, d, None) is None]
    if missing:
        sub.error("missing required flags: " + ", ".join("--" + m.replace("_", "-") for m in missing))
    return parser, args


def _saddlepoint_rows(args) -> list[dict]:
    p = ChannelParams.from_db(args.snr_db, args.sir_db)
    res = find_saddlepoint(cgf_mismatched_llr(p))
    alpha_inf = alpha_high_snr(p).alpha if p.g < p.h else math.nan
    return [{"snr_db": args.snr_db, "sir_db": args.sir_db, "s_hat": res.s_hat, "alpha": 2.0 * res.s_hat,
             "alpha0": alpha_low_snr(p).alpha, "alpha_inf": alpha_inf}]


def _sweep_rows(args) -> list[dict]:
    cfg = SweepConfig(list(args.snr_db), list(args.sir_db), list(args.methods), args.quad_order,
                      args.seed, args.d1, args.d2, args.gmi_fallback)
    return run_alpha_sweep(cfg)


def _pep_rows(args) -> list[dict]:
    q = PepQuery(args.d1, args.d2, args.alpha)
    p = ChannelParams.from_db(args.snr_db, args.sir_db)
    return [{"method": e.method, "value": e.value, "stderr": e.stderr}
            for e in pep_all(q, p, args.samples, args.seed, args.workers)]


def _ber_rows(args) -> list[dict]:
    cfg = BerConfig(
        snr_db_grid=list(args.snr_db), llr_mode=args.llr_mode, seed=args.seed, sir_db=args.sir_db,
        block_info_bits=args.block_info_bits, generators=tuple(args.generators),
        constraint_length=args.constraint_length, min_errors=args.min_errors, max_blocks=args.max_blocks,
        chunk_blocks=args.chunk_blocks, interference=args.interference,
    )
    return [row.as_dict() for row in run_ber(cfg, workers=args.workers).rows]


COMMANDS = {
    "saddlepoint": (_saddlepoint_rows, SADDLEPOINT_COLUMNS),
    "alpha-sweep": (_sweep_rows, SWEEP_COLUMNS),
    "pep": (_pep_rows, PEP_COLUMNS),
    "ber": (_ber_rows, BER_COLUMNS),
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, args = _parse(argv)
    fn, columns = COMMANDS[args.command]
    try:
        rows = fn(args)
    except ValueError as exc:
        print(f"llrcorr {args.command}: error: {exc}", file=sys.stderr)
        return 1
    if args.out:
        with open(args.out, "w", newline="") as fh:
            write_csv(rows, columns, fh)
    else:
        write_csv(rows, columns, sys.stdout)
    return 0


if __name__ == "__main__":
    sys.exit(main())
