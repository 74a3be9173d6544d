"""Acceptance criteria, each run at its stated tolerance.

Every criterion prints one ``PASS``/``FAIL`` line (collected into the pytest
terminal summary, or printed directly when run as a script).  All Monte-Carlo
criteria draw from the fixed base seed below; it was chosen before any run.
"""

import itertools
import time

import numpy as np
import pytest

from scaled_mtp.cli import main
from scaled_mtp.procedures import (
    SevProcedureConfig,
    StpProcedureConfig,
    run_sev_procedure,
    run_stp_procedure,
    sev_thresholds,
    step_down,
    step_up,
    stp_thresholds,
)
from scaled_mtp.simulation import (
    GainStudyConfig,
    GaussianShiftModel,
    TwoTestModel,
    minimizing_effect,
    optimize_parameter,
    price_for_cv,
    two_test_grid_optimum,
    two_test_optimal_cv,
    verify_control,
)
from scaled_mtp.types import (
    Constant,
    HarmonicLinear,
    Linear,
    Power,
    PValueSet,
    TabulatedShape,
    ThresholdSequence,
    TruncatedLinear,
)

from conftest import ACCEPTANCE_LINES
from oracles import (
    bh_classic,
    bonferroni_classic,
    holm_classic,
    lehmann_romano_fer_thresholds,
    single_step_classic,
    step_down_bruteforce,
    step_up_bruteforce,
)

BASE_SEED = 20261016
ALPHA = 0.05
N_REPS = 20_000


def report(number, title, passed, detail, elapsed):
    line = f"{'PASS' if passed else 'FAIL'} criterion {number:>2} {title}: {detail} [{elapsed:.2f}s]"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return passed


def describe_checks(results):
    parts = []
    for label, res in results:
        for c in res.checks:
            parts.append(f"{label}/{c.name} {c.estimate:.4f}<= {c.bound:.4f}+3*{c.std_error:.4f}"
                         f"{'' if c.passed else ' (violated)'}")
    return "; ".join(parts)


# ---------------------------------------------------------------------------


def special_cases(n_vectors=200):
    rng = np.random.default_rng(BASE_SEED)
    mismatches = 0
    max_dev = 0.0
    for _ in range(n_vectors):
        m = int(rng.integers(1, 51))
        # a mixture of signal-sized and uniform values, rounded to force ties
        p = np.where(rng.uniform(size=m) < 0.3, rng.uniform(0, 0.01, m), rng.uniform(size=m))
        p = [float(x) for x in np.round(p, 4)]
        ps = PValueSet.from_values(p)
        ids = lambda outcome: {int(i) for i in outcome.rejected_ids}  # noqa: E731
        k = int(rng.integers(1, m + 1))
        checks = [
            (SevProcedureConfig(ALPHA, Linear()), bh_classic(p, ALPHA)),
            (SevProcedureConfig(ALPHA, Constant(1)), bonferroni_classic(p, ALPHA)),
            (SevProcedureConfig(ALPHA, Constant(k)), single_step_classic(p, ALPHA, k)),
        ]
        for cfg, expected in checks:
            mismatches += ids(run_sev_procedure(ps, cfg)) != expected
        holm_lib = run_stp_procedure(ps, StpProcedureConfig(ALPHA, 0.0, Linear()))
        mismatches += ids(holm_lib) != holm_classic(p, ALPHA)
        t = stp_thresholds(StpProcedureConfig(ALPHA, 0.1, Linear()), m).values
        lr = np.array(lehmann_romano_fer_thresholds(m, ALPHA, 0.1))
        max_dev = max(max_dev, float(np.max(np.abs(t - lr))))
    return mismatches, max_dev


def test_criterion_01_special_case_equivalence():
    start = time.perf_counter()
    mismatches, max_dev = special_cases()
    elapsed = time.perf_counter() - start
    ok = mismatches == 0 and max_dev <= 1e-12 and elapsed < 5
    assert report(1, "special-case equivalence", ok,
                  f"{mismatches} decision mismatches over 200 vectors, FER threshold max dev {max_dev:.1e}",
                  elapsed)


SEV_SCALINGS = [Linear(), Power(0.5), TruncatedLinear(10)]


def sev_control(rho, seed_offset):
    results = []
    for j, scaling in enumerate(SEV_SCALINGS):
        cfg = SevProcedureConfig(ALPHA, scaling)
        for model in (GaussianShiftModel(200, 0, 3.0, rho), GaussianShiftModel(150, 50, 3.0, rho)):
            res = verify_control(model, cfg, N_REPS, BASE_SEED + seed_offset + j, workers=2)
            sev = next(c for c in res.checks if c.name == "sev")
            assert sev.bound == pytest.approx(ALPHA * model.m0 / model.m)
            results.append((f"{scaling.describe()},m1={model.m1}", res))
    return results


def test_criterion_02_sev_control_independence():
    start = time.perf_counter()
    results = sev_control(None, 200)
    elapsed = time.perf_counter() - start
    ok = all(r.passed for _, r in results) and elapsed < 120
    assert report(2, "SEV control, independence", ok, describe_checks(results), elapsed)


def test_criterion_03_sev_control_positive_dependence():
    start = time.perf_counter()
    results = sev_control(0.3, 300)
    elapsed = time.perf_counter() - start
    ok = all(r.passed for _, r in results)
    assert report(3, "SEV control, equicorrelated rho=0.3", ok, describe_checks(results), elapsed)


def test_criterion_04_general_dependence():
    start = time.perf_counter()
    results = []
    for j, scaling in enumerate(SEV_SCALINGS):
        cfg = SevProcedureConfig(ALPHA, scaling, shape=HarmonicLinear())
        for model in (GaussianShiftModel(200, 0, 3.0, 0.5), GaussianShiftModel(150, 50, 3.0, 0.5)):
            res = verify_control(model, cfg, N_REPS, BASE_SEED + 400 + j, workers=2)
            results.append((f"harmonic,{scaling.describe()},m1={model.m1}", res))
    worst = 0.0
    for scaling in (Power(0.5), Power(0.2), Linear()):
        for m in (1, 7, 100, 1000):
            shape = TabulatedShape.inverse_of(scaling, m)
            t = sev_thresholds(SevProcedureConfig(ALPHA, scaling, shape=shape), m).values
            worst = max(worst, float(np.max(np.abs(t - ALPHA * np.arange(1, m + 1) / m))))
    elapsed = time.perf_counter() - start
    ok = all(r.passed for _, r in results) and worst <= 1e-15
    assert report(4, "general dependence", ok,
                  describe_checks(results) + f"; shape-inverse max dev {worst:.1e}", elapsed)


def test_criterion_05_stp_control():
    start = time.perf_counter()
    results = []
    for j, dependence in enumerate(("simes", "arbitrary")):
        cfg = StpProcedureConfig(ALPHA, 0.1, Linear(), dependence=dependence)
        for model in (GaussianShiftModel(100, 0, 3.0), GaussianShiftModel(80, 20, 3.0)):
            res = verify_control(model, cfg, N_REPS, BASE_SEED + 500 + j, workers=2)
            results.append((f"{dependence},m1={model.m1}", res))
    elapsed = time.perf_counter() - start
    ok = all(r.passed for _, r in results)
    assert report(5, "STP control", ok, describe_checks(results), elapsed)


def test_criterion_06_truncated_dual_control():
    start = time.perf_counter()
    res = verify_control(GaussianShiftModel(950, 50, 3.0), SevProcedureConfig(ALPHA, TruncatedLinear(5)),
                         10_000, BASE_SEED + 600, workers=2)
    elapsed = time.perf_counter() - start
    rep = res.report
    fdr_ok = rep.fdr.within(ALPHA)
    pfer_ok = rep.pfer.within(5 * ALPHA)
    ok = fdr_ok and pfer_ok and elapsed < 180
    assert report(6, "truncated-linear dual control", ok,
                  f"FDR {rep.fdr.estimate:.4f}+-{rep.fdr.std_error:.4f} <= 0.05, "
                  f"PFER {rep.pfer.estimate:.4f}+-{rep.pfer.std_error:.4f} <= 0.25", elapsed)


def test_criterion_07_two_test_closed_form():
    start = time.perf_counter()
    worst = 0.0
    for lam, delta in itertools.product((1.5, 3.0, 6.8, 30.0), (1.0, 2.0, 3.0, 5.0)):
        model = TwoTestModel(delta, lam)
        worst = max(worst, abs(two_test_grid_optimum(model) - two_test_optimal_cv(model)))
    # the smallest optimal critical value over all effects
    anchors = {6.8: 1.96, 3.9: 1.645}
    got = {lam: two_test_optimal_cv(TwoTestModel(minimizing_effect(lam), lam)) for lam in anchors}
    anchor_ok = all(abs(got[lam] - cv) < 5e-3 for lam, cv in anchors.items())
    anchor_ok &= abs(price_for_cv(1.96) - 6.8) < 0.05
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-3 and anchor_ok and elapsed < 1
    assert report(7, "two-test closed form", ok,
                  f"max |grid - closed form| {worst:.1e}; anchors "
                  + ", ".join(f"lambda={lam} -> cv={got[lam]:.4f}" for lam in anchors), elapsed)


LAMBDAS = (1.0, 5.0, 10.0, 20.0, 30.0)
GAMMAS = tuple(round(0.05 * i, 2) for i in range(21))
TAUS = (1, 2, 5, 10, 20, 50, 100, 500, 1000)


def non_increasing_with_one_inversion(seq, grid):
    pos = [grid.index(v) for v in seq]
    inversions = [(a, b) for a, b in zip(pos, pos[1:]) if b > a]
    return len(inversions) == 0 or (len(inversions) == 1 and inversions[0][1] - inversions[0][0] == 1)


def gain_curves():
    curves = {}
    for m1 in (10, 100):
        model = GaussianShiftModel(1000 - m1, m1, 3.0)
        for parameter, grid in (("gamma", GAMMAS), ("tau", TAUS)):
            study = GainStudyConfig(LAMBDAS, grid, parameter, ALPHA, 200, BASE_SEED + 800 + m1)
            curves[(m1, parameter)] = [p.best for p in optimize_parameter(study, model, workers=2)]
    return curves


def test_criterion_08_gain_curve_trends():
    start = time.perf_counter()
    curves = gain_curves()
    elapsed = time.perf_counter() - start
    failures = []
    for (m1, parameter), best in curves.items():
        grid = GAMMAS if parameter == "gamma" else tuple(float(t) for t in TAUS)
        if not non_increasing_with_one_inversion(best, list(grid)):
            failures.append(f"{parameter} m1={m1} not non-increasing")
        if parameter == "gamma":
            if any(b == 1.0 and lam > 5 for lam, b in zip(LAMBDAS, best)):
                failures.append(f"gamma=1 optimal beyond lambda=5 (m1={m1})")
            if m1 == 10:
                plateau = [b for lam, b in zip(LAMBDAS, best) if lam >= 20]
                if not all(0.4 <= b <= 0.8 for b in plateau):
                    failures.append(f"m1=10 plateau {plateau} outside [0.4, 0.8]")
        elif any(b >= 100 and lam > 5 for lam, b in zip(LAMBDAS, best)):
            failures.append(f"tau>=100 optimal beyond lambda=5 (m1={m1})")
    ok = not failures and elapsed < 900
    curve_text = "; ".join(f"{p} m1={m1}: {best}" for (m1, p), best in curves.items())
    assert report(8, "gain-curve trends", ok,
                  curve_text + ("" if ok else " -- " + "; ".join(failures)), elapsed)


P_GRID = (0.01, 0.03, 0.05)
T_SEQUENCES = {
    "linear": lambda m: [0.05 * i / m for i in range(1, m + 1)],
    "flat": lambda m: [0.03] * m,
    "holm": lambda m: [0.05 / (m - i + 1) for i in range(1, m + 1)],
    "steep": lambda m: [0.01 * i for i in range(1, m + 1)],
}


def engine_mismatches():
    bad = 0
    cases = 0
    for m in range(1, 7):
        for name, make in T_SEQUENCES.items():
            t_raw = np.clip(make(m), 0, 1)
            t = ThresholdSequence(t_raw)
            for p in itertools.product(P_GRID, repeat=m):
                ps = PValueSet.from_values(p)
                for engine, oracle in ((step_up, step_up_bruteforce), (step_down, step_down_bruteforce)):
                    U, expected = oracle(list(p), list(t_raw))
                    got = engine(ps, t)
                    bad += (got.U, set(got.rejected_ids)) != (U, expected)
                    cases += 1
    return bad, cases


def test_criterion_09_engine_oracle_equivalence():
    start = time.perf_counter()
    bad, cases = engine_mismatches()
    elapsed = time.perf_counter() - start
    assert report(9, "engine oracle equivalence", bad == 0,
                  f"{bad} mismatches in {cases} exhaustive cases", elapsed)


def test_criterion_10_determinism(tmp_path):
    start = time.perf_counter()
    commands = {
        "verify": ["verify", "--m0", "150", "--m1", "50", "--n-reps", "3000", "--scaling", "linear",
                   "--scaling", "power:0.5", "--scaling", "truncated:10"],
        "optimize": ["optimize", "--m0", "900", "--m1", "100", "--n-reps", "300", "--lambdas", "1,5,10,20,30"],
    }
    identical = {}
    for name, cmd in commands.items():
        for fmt in ("csv", "json"):
            blobs = []
            for workers in (1, 3):
                out = tmp_path / f"{name}-{workers}.{fmt}"
                main(cmd + ["--seed", str(BASE_SEED), "--workers", str(workers), "--format", fmt, "-o", str(out)])
                blobs.append(out.read_bytes())
            identical[f"{name}.{fmt}"] = blobs[0] == blobs[1] and len(blobs[0]) > 0
    elapsed = time.perf_counter() - start
    assert report(10, "determinism across workers", all(identical.values()),
                  ", ".join(f"{k} {'identical' if v else 'DIFFERENT'}" for k, v in identical.items()), elapsed)


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
