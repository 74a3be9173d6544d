"""Monte-Carlo engine for the Gaussian shift model.

Every replication owns a random stream derived from ``(seed, replication
index)``, so results do not depend on how replications are split across
worker processes. All procedures in one run see the same draws (common
random numbers).
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Literal, Sequence, Union

import numpy as np

from .metrics import MetricReport, metrics_from_counts, sfdp_values
from .normal import normal_cdf, normal_quantile, normal_sf
from .procedures import (
    SevProcedureConfig,
    StpProcedureConfig,
    sev_thresholds,
    step_down_index,
    step_up_index,
    stp_thresholds,
)
from .types import GroundTruth, Power, PValueSet, TruncatedLinear

__all__ = [
    "GaussianShiftModel",
    "GainStudyConfig",
    "TwoTestModel",
    "Check",
    "VerificationResult",
    "CurvePoint",
    "normal_cdf",
    "normal_quantile",
    "replication_rng",
    "draw_pvalues",
    "simulate_counts",
    "verify_control",
    "gain_surface",
    "optimize_parameter",
    "curve_from_surface",
    "two_test_gain",
    "two_test_optimal_cv",
    "two_test_grid_optimum",
    "minimizing_effect",
    "price_for_cv",
    "default_workers",
]

ProcedureConfig = Union[SevProcedureConfig, StpProcedureConfig]

BLOCK = 250


def default_workers() -> int:
    env = os.environ.get("SCALED_MTP_WORKERS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


@dataclass(frozen=True)
class GaussianShiftModel:
    """m0 uniform nulls followed by m1 alternatives shifted by ``delta``.

    ``rho=None`` means independent statistics; otherwise the statistics are
    equicorrelated with correlation ``rho`` through one shared factor.
    """

    m0: int
    m1: int
    delta: float = 3.0
    rho: float | None = None

    def __post_init__(self):
        if self.m0 < 0 or self.m1 < 0 or self.m0 + self.m1 < 1:
            raise ValueError("need m0, m1 >= 0 and m0 + m1 >= 1")
        if self.delta < 0:
            raise ValueError("delta must be >= 0")
        if self.rho is not None and not 0.0 <= self.rho < 1.0:
            raise ValueError("rho must lie in [0, 1)")

    @property
    def m(self) -> int:
        return self.m0 + self.m1

    def alternative_cdf(self, u):
        """F(u) = 1 - Phi(z_{1-u} - delta)."""
        return normal_sf(normal_quantile(1.0 - np.asarray(u, dtype=float)) - self.delta)

    def truth(self) -> GroundTruth:
        return GroundTruth(frozenset(range(self.m0)), frozenset(range(self.m0, self.m)))

    def describe(self) -> dict:
        return {"m0": self.m0, "m1": self.m1, "delta": self.delta, "rho": self.rho}


def replication_rng(seed: int, rep: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(rep,))))


def _draw_row(model: GaussianShiftModel, rng: np.random.Generator) -> np.ndarray:
    if model.rho is None:
        z = rng.standard_normal(model.m)
    else:
        w = rng.standard_normal()
        z = math.sqrt(model.rho) * w + math.sqrt(1.0 - model.rho) * rng.standard_normal(model.m)
    z[model.m0 :] += model.delta
    return normal_sf(z)


def draw_pvalues(model: GaussianShiftModel, rng: np.random.Generator) -> tuple[PValueSet, GroundTruth]:
    """One replication: ids 0..m0-1 are nulls, the rest alternatives."""
    p = _draw_row(model, rng)
    return PValueSet(tuple(range(model.m)), p), model.truth()


# ---------------------------------------------------------------------------
# batch engine
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class _Compiled:
    thresholds: np.ndarray
    step_up: bool
    weights: np.ndarray | None


def _compile(cfg: ProcedureConfig, m: int) -> _Compiled:
    if isinstance(cfg, SevProcedureConfig):
        t = sev_thresholds(cfg, m).values
        w = None
        if cfg.weights is not None and not cfg.weights.is_unit:
            if len(cfg.weights) != m:
                raise ValueError(f"{len(cfg.weights)} weights for m={m}")
            w = np.asarray(cfg.weights.weights)
        return _Compiled(np.asarray(t), cfg.mode == "step_up", w)
    if isinstance(cfg, StpProcedureConfig):
        return _Compiled(np.asarray(stp_thresholds(cfg, m).values), False, None)
    raise TypeError(f"not a procedure config: {cfg!r}")


def _run_block(model, compiled, seed, start, stop):
    rows = np.stack([_draw_row(model, replication_rng(seed, r)) for r in range(start, stop)])
    idx = np.arange(stop - start)
    sorted_cache: dict[int, tuple[np.ndarray, np.ndarray]] = {}
    out = []
    for c in compiled:
        key = -1 if c.weights is None else id(c.weights)
        if key not in sorted_cache:
            vals = rows if c.weights is None else rows / c.weights
            order = np.argsort(vals, axis=1, kind="stable")
            cum_null = np.cumsum(order < model.m0, axis=1)
            sorted_cache[key] = (np.take_along_axis(vals, order, axis=1), cum_null)
        sp, cum_null = sorted_cache[key]
        U = step_up_index(sp, c.thresholds) if c.step_up else step_down_index(sp, c.thresholds)
        fp = np.where(U > 0, cum_null[idx, np.maximum(U, 1) - 1], 0)
        out.append((fp.astype(np.int64), (U - fp).astype(np.int64)))
    return out


def simulate_counts(
    model: GaussianShiftModel,
    configs: Sequence[ProcedureConfig],
    n_reps: int,
    seed: int,
    workers: int = 1,
) -> list[tuple[np.ndarray, np.ndarray]]:
    """(FP, TP) per replication for each config, all on the same draws."""
    if n_reps < 1:
        raise ValueError("n_reps must be >= 1")
    compiled = [_compile(cfg, model.m) for cfg in configs]
    blocks = [(s, min(s + BLOCK, n_reps)) for s in range(0, n_reps, BLOCK)]
    if workers > 1 and len(blocks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_run_block, model, compiled, seed, a, b) for a, b in blocks]
            parts = [f.result() for f in futures]
    else:
        parts = [_run_block(model, compiled, seed, a, b) for a, b in blocks]
    result = []
    for j in range(len(compiled)):
        fp = np.concatenate([part[j][0] for part in parts])
        tp = np.concatenate([part[j][1] for part in parts])
        result.append((fp, tp))
    return result


# ---------------------------------------------------------------------------
# control checks
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Check:
    name: str
    estimate: float
    std_error: float
    bound: float
    passed: bool


@dataclass(frozen=True)
class VerificationResult:
    report: MetricReport
    checks: tuple[Check, ...]
    bound: float

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)


def nominal_bound(model: GaussianShiftModel, cfg: ProcedureConfig) -> float:
    """(alpha/m) * sum of null weights for SEV procedures, alpha for STP."""
    if isinstance(cfg, StpProcedureConfig):
        return cfg.alpha
    if cfg.weights is None:
        null_weight = float(model.m0)
    else:
        null_weight = float(np.sum(cfg.weights.weights[: model.m0]))
    return cfg.alpha / model.m * null_weight


def verify_control(
    model: GaussianShiftModel,
    cfg: ProcedureConfig,
    n_reps: int,
    seed: int,
    *,
    workers: int = 1,
    k: int = 1,
    lam: float = 1.0,
    n_se: float = 3.0,
) -> VerificationResult:
    """Estimate error rates by simulation and compare them with the bound
    the control guarantees promise, allowing ``n_se`` standard errors."""
    ((fp, tp),) = simulate_counts(model, [cfg], n_reps, seed, workers)
    m = model.m
    beta = cfg.beta if isinstance(cfg, StpProcedureConfig) else 0.0
    sv = sfdp_values(fp, fp + tp, cfg.scaling, m)
    report = metrics_from_counts(fp, tp, sv, m, k=k, beta=beta, lam=lam)
    bound = nominal_bound(model, cfg)

    def check(name, est, b):
        return Check(name, est.estimate, est.std_error, b, est.within(b, n_se))

    checks = []
    if isinstance(cfg, StpProcedureConfig):
        checks.append(check("stp", report.stp, bound))
    else:
        s = cfg.scaling.values(m)
        checks.append(check("sev", report.sev, bound))
        # FP/R <= FP/s(R) when s(r) <= r, and FP/s(m) <= FP/s(R)
        if np.all(s <= np.arange(1, m + 1)):
            checks.append(check("fdr", report.fdr, bound))
            if model.m1 == 0:
                checks.append(check("fwer", report.fwer, bound))
        checks.append(check("pfer", report.pfer, float(s[-1]) * bound))
    return VerificationResult(report, tuple(checks), bound)


# ---------------------------------------------------------------------------
# gain optimization
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GainStudyConfig:
    lambdas: tuple[float, ...]
    values: tuple[float, ...]
    parameter: Literal["gamma", "tau"] = "gamma"
    alpha: float = 0.05
    n_reps: int = 200
    seed: int = 0

    def __post_init__(self):
        lams = tuple(float(x) for x in self.lambdas)
        vals = tuple(float(x) for x in self.values)
        if not lams or not vals:
            raise ValueError("lambda and parameter grids must be non-empty")
        if list(lams) != sorted(lams) or list(vals) != sorted(vals):
            raise ValueError("grids must be sorted ascending")
        if self.parameter not in ("gamma", "tau"):
            raise ValueError(f"unknown parameter {self.parameter!r}")
        object.__setattr__(self, "lambdas", lams)
        object.__setattr__(self, "values", vals)

    def procedures(self) -> list[SevProcedureConfig]:
        if self.parameter == "gamma":
            return [SevProcedureConfig(self.alpha, Power(v)) for v in self.values]
        return [SevProcedureConfig(self.alpha, TruncatedLinear(int(v))) for v in self.values]


@dataclass(frozen=True)
class CurvePoint:
    lam: float
    best: float
    gain: float
    std_error: float


def gain_surface(
    study: GainStudyConfig, model: GaussianShiftModel, workers: int = 1
) -> tuple[np.ndarray, np.ndarray]:
    """Mean gain and its standard error, shape (len(lambdas), len(values))."""
    counts = simulate_counts(model, study.procedures(), study.n_reps, study.seed, workers)
    n = study.n_reps
    mean = np.empty((len(study.lambdas), len(study.values)))
    se = np.empty_like(mean)
    for j, (fp, tp) in enumerate(counts):
        for i, lam in enumerate(study.lambdas):
            g = tp - lam * fp
            mean[i, j] = np.mean(g)
            se[i, j] = np.std(g, ddof=1) / math.sqrt(n) if n > 1 else 0.0
    return mean, se


def curve_from_surface(study: GainStudyConfig, mean: np.ndarray, se: np.ndarray) -> list[CurvePoint]:
    curve = []
    for i, lam in enumerate(study.lambdas):
        j = int(np.argmax(mean[i]))  # first maximum, i.e. smallest parameter
        curve.append(CurvePoint(lam, study.values[j], float(mean[i, j]), float(se[i, j])))
    return curve


def optimize_parameter(
    study: GainStudyConfig, model: GaussianShiftModel, workers: int = 1
) -> list[CurvePoint]:
    """Gain-maximizing gamma (or tau) for each penalty lambda."""
    mean, se = gain_surface(study, model, workers)
    return curve_from_surface(study, mean, se)


# ---------------------------------------------------------------------------
# two tests, closed form
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TwoTestModel:
    """One null N(0,1) and one alternative N(delta,1), both rejected above cv."""

    delta: float
    lam: float = 1.0

    def __post_init__(self):
        if not self.delta > 0:
            raise ValueError("delta must be > 0")
        if self.lam <= 0:
            raise ValueError("lambda must be positive")


def two_test_gain(model: TwoTestModel, cv: float):
    """Phi(delta - cv) - lambda * Phi(-cv)."""
    cv = np.asarray(cv, dtype=float)
    out = normal_cdf(model.delta - cv) - model.lam * normal_cdf(-cv)
    return float(out) if np.ndim(out) == 0 else out


def two_test_optimal_cv(model: TwoTestModel) -> float:
    return math.log(model.lam) / model.delta + model.delta / 2.0


def two_test_grid_optimum(model: TwoTestModel, step: float = 1e-3, lo: float = -10.0, hi: float = 20.0) -> float:
    grid = lo + step * np.arange(int(round((hi - lo) / step)) + 1)
    return float(grid[np.argmax(two_test_gain(model, grid))])


def minimizing_effect(lam: float) -> float:
    """The delta at which the optimal critical value is smallest."""
    return math.sqrt(2.0 * math.log(lam))


def price_for_cv(cv: float) -> float:
    """Penalty lambda whose smallest optimal critical value equals cv."""
    return math.exp(cv * cv / 2.0)
