"""Saddlepoint geometry of the observation CGF.

Writes CSV rows ``s, kappa, kappa1, kappa1_low, kappa1_high`` where the last
two columns are the linearized derivatives whose roots give the low- and
high-SNR seeds, followed by a summary row per seed and the solver's root.
"""

import argparse
import sys

import numpy as np

from llrcorr.cgf import cgf_observation, find_saddlepoint, saddle_seed_high_snr, saddle_seed_low_snr
from llrcorr.experiments import write_csv
from llrcorr.llr import ChannelParams


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--snr-db", type=float, default=10.0)
    ap.add_argument("--sir-db", type=float, default=6.0)
    ap.add_argument("--points", type=int, default=201)
    ap.add_argument("--out")
    args = ap.parse_args(argv)

    p = ChannelParams.from_db(args.snr_db, args.sir_db)
    k = cgf_observation(p)
    s_hat = find_saddlepoint(k).s_hat
    rows = []
    for s in np.linspace(0.0, 1.5 * p.h / p.sigma2_z, args.points):
        rows.append({
            "s": s, "kappa": k(s), "kappa1": k.d1(s),
            "kappa1_low": -p.h + p.sigma2_ni * s,
            "kappa1_high": -p.h + p.g + p.sigma2_z * s,
        })
    marks = {"s0": saddle_seed_low_snr(p), "s_inf": saddle_seed_high_snr(p), "s_hat": s_hat}
    cols = ("s", "kappa", "kappa1", "kappa1_low", "kappa1_high", "mark")
    rows += [{"s": v, "kappa": k(v), "kappa1": k.d1(v), "mark": name} for name, v in marks.items()]
    out = open(args.out, "w") if args.out else sys.stdout
    write_csv(rows, cols, out)


if __name__ == "__main__":
    main()
