"""Correction factor versus SNR for several SIRs and estimators (CSV)."""

import argparse
import sys

import numpy as np

from llrcorr.experiments import SWEEP_COLUMNS, SweepConfig, run_alpha_sweep, write_csv


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--snr-min", type=float, default=-5.0)
    ap.add_argument("--snr-max", type=float, default=25.0)
    ap.add_argument("--snr-step", type=float, default=1.0)
    ap.add_argument("--sir-db", type=float, nargs="+", default=[3.0, 6.0, 10.0, 12.0])
    ap.add_argument("--methods", nargs="+",
                    default=["saddlepoint", "gmi", "wlsf", "gauss_moment", "high_snr", "grid_2sm"])
    ap.add_argument("--d1", type=int, default=4)
    ap.add_argument("--d2", type=int, default=4)
    ap.add_argument("--out")
    args = ap.parse_args(argv)

    snr = np.arange(args.snr_min, args.snr_max + args.snr_step / 2, args.snr_step)
    cfg = SweepConfig(list(snr), args.sir_db, args.methods, d1=args.d1, d2=args.d2, gmi_fallback=True)
    out = open(args.out, "w") if args.out else sys.stdout
    write_csv(run_alpha_sweep(cfg), SWEEP_COLUMNS, out)


if __name__ == "__main__":
    main()
