"""Monte-Carlo check of every error-rate guarantee in one table.

Scenarios cover independence, equicorrelated statistics, the harmonic
shape for arbitrary dependence, the tail-probability procedures, and the
truncated-linear procedure's joint FDR/PFER control:

    python scripts/verify_control.py --seed 1 --n-reps 20000 -o control.csv

Exits with status 1 if any check fails.
"""

import argparse
import csv
import logging
import sys
from pathlib import Path

from scaled_mtp.procedures import SevProcedureConfig, StpProcedureConfig
from scaled_mtp.simulation import GaussianShiftModel, default_workers, verify_control
from scaled_mtp.types import HarmonicLinear, Linear, Power, TruncatedLinear

log = logging.getLogger("verify_control")


def scenarios(alpha):
    scalings = (Linear(), Power(0.5), TruncatedLinear(10))
    for rho, label in ((None, "independent"), (0.3, "equicorrelated-0.3")):
        for s in scalings:
            for m0, m1 in ((200, 0), (150, 50)):
                yield label, GaussianShiftModel(m0, m1, 3.0, rho), SevProcedureConfig(alpha, s)
    for s in scalings:
        for m0, m1 in ((200, 0), (150, 50)):
            model = GaussianShiftModel(m0, m1, 3.0, 0.5)
            yield "harmonic-shape,equicorrelated-0.5", model, SevProcedureConfig(alpha, s, shape=HarmonicLinear())
    for dependence in ("simes", "arbitrary"):
        for m0, m1 in ((100, 0), (80, 20)):
            yield f"stp-{dependence}", GaussianShiftModel(m0, m1, 3.0), StpProcedureConfig(
                alpha, 0.1, Linear(), dependence=dependence)
    yield "truncated-dual", GaussianShiftModel(950, 50, 3.0), SevProcedureConfig(alpha, TruncatedLinear(5))


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--seed", type=int, required=True)
    ap.add_argument("--n-reps", type=int, default=20000)
    ap.add_argument("--alpha", type=float, default=0.05)
    ap.add_argument("--workers", type=int, default=default_workers())
    ap.add_argument("-o", "--output", type=Path, default=Path("control.csv"))
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(message)s")

    failed = 0
    with args.output.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["scenario", "m0", "m1", "procedure", "check", "estimate", "std_error", "bound", "passed"])
        for i, (label, model, cfg) in enumerate(scenarios(args.alpha)):
            res = verify_control(model, cfg, args.n_reps, args.seed + i, workers=args.workers)
            for c in res.checks:
                w.writerow([label, model.m0, model.m1, cfg.scaling.describe(), c.name,
                            repr(c.estimate), repr(c.std_error), repr(c.bound), int(c.passed)])
                failed += not c.passed
            log.info("%-36s m1=%-3d %-14s %s", label, model.m1, cfg.scaling.describe(),
                     "pass" if res.passed else "FAIL")
    log.info("%d failed checks; table in %s", failed, args.output)
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
