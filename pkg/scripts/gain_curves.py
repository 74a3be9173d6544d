"""Gain-maximizing gamma and tau as a function of the false-positive price.

Runs the full-size study (m = 1000, delta = 3, alpha = 0.05, lambda = 1..30)
for m1 in {10, 100} and writes one plot-ready CSV per (parameter, m1):

    python scripts/gain_curves.py --seed 1 --n-reps 1000 --out results/
"""

import argparse
import csv
import logging
import time
from pathlib import Path

from scaled_mtp.simulation import (
    GainStudyConfig,
    GaussianShiftModel,
    curve_from_surface,
    default_workers,
    gain_surface,
)

GAMMAS = tuple(round(0.05 * i, 2) for i in range(21))
TAUS = (1, 2, 5, 10, 20, 50, 100, 500, 1000)

log = logging.getLogger("gain_curves")


def run(parameter, m1, args):
    grid = GAMMAS if parameter == "gamma" else TAUS
    lambdas = tuple(float(x) for x in range(1, args.max_lambda + 1))
    study = GainStudyConfig(lambdas, grid, parameter, args.alpha, args.n_reps, args.seed)
    model = GaussianShiftModel(args.m - m1, m1, args.delta)
    mean, se = gain_surface(study, model, args.workers)
    curve = curve_from_surface(study, mean, se)
    path = args.out / f"{parameter}_m1_{m1}.csv"
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["lambda", parameter, "gain", "std_error"])
        for p in curve:
            w.writerow([p.lam, p.best, repr(p.gain), repr(p.std_error)])
    log.info("%s m1=%d: %s", parameter, m1, [p.best for p in curve])
    return path


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--seed", type=int, required=True)
    ap.add_argument("--n-reps", type=int, default=1000)
    ap.add_argument("--m", type=int, default=1000)
    ap.add_argument("--m1", type=int, nargs="+", default=[10, 100])
    ap.add_argument("--delta", type=float, default=3.0)
    ap.add_argument("--alpha", type=float, default=0.05)
    ap.add_argument("--max-lambda", type=int, default=30)
    ap.add_argument("--workers", type=int, default=default_workers())
    ap.add_argument("--out", type=Path, default=Path("results"))
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    args.out.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    for parameter in ("gamma", "tau"):
        for m1 in args.m1:
            log.info("wrote %s", run(parameter, m1, args))
    log.info("done in %.1fs", time.perf_counter() - start)


if __name__ == "__main__":
    main()
