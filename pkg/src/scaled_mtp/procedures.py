"""Threshold construction and step-up / step-down rejection engines.

Two families live here:

* SEV procedures: thresholds ``t_i = alpha * xi(s(i)) / m``, run step-up by
  default, optionally with weights (p-values rescaled to p_i / w_i).
* STP procedures: the generalized Lehmann-Romano step-down thresholds,
  optionally divided by a harmonic correction constant for arbitrary
  dependence.

Classical procedures are special cases and have thin named wrappers at the
bottom of the module.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .types import (
    Constant,
    HarmonicLinear,
    Identity,
    Linear,
    PValueSet,
    RejectionOutcome,
    Scaling,
    Shape,
    ThresholdSequence,
    WeightVector,
)

Mode = Literal["step_up", "step_down"]
Dependence = Literal["simes", "arbitrary"]
CorrectionUpper = Literal["conservative", "strict"]

_SNAP = 2.0**-32


def snapped_floor(x: float) -> int:
    """floor(x), treating values within 2**-32 of an integer as that integer."""
    r = round(x)
    if abs(x - r) <= _SNAP:
        return int(r)
    return math.floor(x)


def _check_alpha(alpha: float) -> None:
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")


def _clamp(values: np.ndarray, meta: dict) -> np.ndarray:
    if np.any(values > 1.0):
        meta.setdefault("warnings", []).append(
            f"{int(np.sum(values > 1.0))} thresholds clamped to 1"
        )
    return np.clip(values, 0.0, 1.0)


@dataclass(frozen=True)
class SevProcedureConfig:
    alpha: float
    scaling: Scaling = field(default_factory=Linear)
    shape: Shape = field(default_factory=Identity)
    weights: WeightVector | None = None
    mode: Mode = "step_up"

    def __post_init__(self):
        _check_alpha(self.alpha)
        if self.mode not in ("step_up", "step_down"):
            raise ValueError(f"unknown mode {self.mode!r}")


@dataclass(frozen=True)
class StpProcedureConfig:
    alpha: float
    beta: float = 0.0
    scaling: Scaling = field(default_factory=Linear)
    dependence: Dependence = "simes"
    correction_upper: CorrectionUpper = "conservative"

    def __post_init__(self):
        _check_alpha(self.alpha)
        if not self.beta >= 0:
            raise ValueError("beta must be >= 0")
        if self.dependence not in ("simes", "arbitrary"):
            raise ValueError(f"unknown dependence {self.dependence!r}")
        if self.correction_upper not in ("conservative", "strict"):
            raise ValueError(f"unknown correction bound {self.correction_upper!r}")


# ---------------------------------------------------------------------------
# thresholds
# ---------------------------------------------------------------------------


def sev_thresholds(cfg: SevProcedureConfig, m: int) -> ThresholdSequence:
    """t_i = alpha * xi(s(i)) / m, clamped to [0, 1].

    Weights are not folded in; they act on the p-values instead.
    """
    s = cfg.scaling.values(m)
    xi = cfg.shape.apply(s, m)
    if np.any(np.diff(xi) < 0) or not np.all(xi > 0):
        raise ValueError("shape applied to scaling must be positive and non-decreasing")
    meta = {
        "kind": "sev",
        "alpha": cfg.alpha,
        "scaling": cfg.scaling.describe(),
        "shape": cfg.shape.describe(),
    }
    t = _clamp(cfg.alpha * xi / m, meta)
    return ThresholdSequence(t, meta)


def stp_levels(beta: float, scaling: Scaling, m: int) -> np.ndarray:
    """The integers floor(beta * s(i)) + 1 for i = 1..m."""
    s = scaling.values(m)
    return np.array([snapped_floor(beta * v) + 1 for v in s], dtype=np.int64)


def harmonic_partial_sum(lo: int, hi: int) -> float:
    """sum_{i=lo}^{hi} 1/i, smallest term first. Empty range gives 0."""
    total = 0.0
    for i in range(hi, lo - 1, -1):
        total += 1.0 / i
    return total


def correction_range(
    beta: float, scaling: Scaling, m: int, upper: CorrectionUpper = "conservative"
) -> tuple[int, int]:
    """Summation limits (l, h) of the arbitrary-dependence constant.

    ``conservative`` uses h = floor(beta s(m)) + 1, which covers every m0;
    ``strict`` uses h = floor(beta s(m)).
    """
    levels = stp_levels(beta, scaling, m)
    lo = int(levels[0])
    hi = int(levels[-1]) if upper == "conservative" else int(levels[-1]) - 1
    return lo, hi


def correction_constant(
    beta: float, scaling: Scaling, m: int, upper: CorrectionUpper = "conservative"
) -> float:
    """C_{l,h} = sum_{i=l}^{h} 1/i; 1.0 when the range is empty."""
    lo, hi = correction_range(beta, scaling, m, upper)
    if hi < lo:
        return 1.0
    return harmonic_partial_sum(lo, hi)


def stp_thresholds(cfg: StpProcedureConfig, m: int) -> ThresholdSequence:
    """Generalized Lehmann-Romano critical values.

    With k_i = floor(beta s(i)) + 1:
    t_i = k_i alpha / m when i <= k_i, else k_i alpha / (m + k_i - i).
    """
    k = stp_levels(cfg.beta, cfg.scaling, m).astype(float)
    i = np.arange(1, m + 1, dtype=float)
    denom = np.where(i <= k, float(m), m + k - i)
    t = k * cfg.alpha / denom
    meta = {
        "kind": "stp",
        "alpha": cfg.alpha,
        "beta": cfg.beta,
        "scaling": cfg.scaling.describe(),
        "dependence": cfg.dependence,
    }
    if cfg.dependence == "arbitrary":
        lo, hi = correction_range(cfg.beta, cfg.scaling, m, cfg.correction_upper)
        c = correction_constant(cfg.beta, cfg.scaling, m, cfg.correction_upper)
        if hi < lo:
            meta.setdefault("warnings", []).append(
                f"empty correction sum (l={lo}, h={hi}); no correction applied"
            )
        meta.update(correction=c, correction_range=(lo, hi), uncorrected=_clamp(t.copy(), {}))
        t = t / c
    t = _clamp(t, meta)
    return ThresholdSequence(t, meta)


# ---------------------------------------------------------------------------
# engines
# ---------------------------------------------------------------------------


def weighted_transform(pvals: PValueSet, w: WeightVector) -> PValueSet:
    """Replace p_i by p_i / w_i. Values above 1 are kept (never rejected)."""
    if len(w) != pvals.m:
        raise ValueError(f"{len(w)} weights for {pvals.m} p-values")
    return PValueSet(pvals.ids, pvals.p / w.weights, allow_above_one=True)


def _check_lengths(pvals: PValueSet, t: ThresholdSequence) -> None:
    if len(t) != pvals.m:
        raise ValueError(f"{len(t)} thresholds for {pvals.m} p-values")


def step_up_index(sorted_p: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Largest i with p_(i) <= t_i, along the last axis (0 if none)."""
    hit = sorted_p <= t
    m = hit.shape[-1]
    last = m - np.argmax(hit[..., ::-1], axis=-1)
    return np.where(hit.any(axis=-1), last, 0)


def step_down_index(sorted_p: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Largest i such that every rank j <= i has p_(j) <= t_j."""
    miss = sorted_p > t
    m = miss.shape[-1]
    return np.where(miss.any(axis=-1), np.argmax(miss, axis=-1), m)


def step_up(pvals: PValueSet, t: ThresholdSequence) -> RejectionOutcome:
    _check_lengths(pvals, t)
    U = int(step_up_index(pvals.sorted_p, t.values))
    return RejectionOutcome.from_rank(pvals, U)


def step_down(pvals: PValueSet, t: ThresholdSequence) -> RejectionOutcome:
    _check_lengths(pvals, t)
    U = int(step_down_index(pvals.sorted_p, t.values))
    return RejectionOutcome.from_rank(pvals, U)


def run_sev_procedure(pvals: PValueSet, cfg: SevProcedureConfig) -> RejectionOutcome:
    if cfg.weights is not None:
        pvals = weighted_transform(pvals, cfg.weights)
    t = sev_thresholds(cfg, pvals.m)
    engine = step_up if cfg.mode == "step_up" else step_down
    return engine(pvals, t)


def run_stp_procedure(pvals: PValueSet, cfg: StpProcedureConfig) -> RejectionOutcome:
    return step_down(pvals, stp_thresholds(cfg, pvals.m))


# ---------------------------------------------------------------------------
# named special cases
# ---------------------------------------------------------------------------


def benjamini_hochberg(pvals: PValueSet, alpha: float) -> RejectionOutcome:
    return run_sev_procedure(pvals, SevProcedureConfig(alpha, Linear()))


def benjamini_yekutieli(pvals: PValueSet, alpha: float) -> RejectionOutcome:
    return run_sev_procedure(pvals, SevProcedureConfig(alpha, Linear(), HarmonicLinear()))


def bonferroni(pvals: PValueSet, alpha: float) -> RejectionOutcome:
    return run_sev_procedure(pvals, SevProcedureConfig(alpha, Constant(1.0)))


def hommel_hoffmann(pvals: PValueSet, alpha: float, k: int) -> RejectionOutcome:
    """Single-step k-FWER procedure, t_i = k alpha / m."""
    return run_sev_procedure(pvals, SevProcedureConfig(alpha, Constant(float(k))))


def holm(pvals: PValueSet, alpha: float) -> RejectionOutcome:
    return run_stp_procedure(pvals, StpProcedureConfig(alpha, beta=0.0))


def lehmann_romano_fer(pvals: PValueSet, alpha: float, beta: float) -> RejectionOutcome:
    if not 0.0 < beta < 1.0:
        raise ValueError("FER tolerance must lie in (0, 1)")
    return run_stp_procedure(pvals, StpProcedureConfig(alpha, beta, Linear()))


def lehmann_romano_kfwer(pvals: PValueSet, alpha: float, k: int) -> RejectionOutcome:
    """Step-down k-FWER control: constant scaling with beta * s == k - 1."""
    if k < 1:
        raise ValueError("k must be >= 1")
    return run_stp_procedure(pvals, StpProcedureConfig(alpha, float(k - 1), Constant(1.0)))
