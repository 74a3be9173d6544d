"""Error-rate estimators over Monte-Carlo replications."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from .types import Confusion, Scaling, sfdp

__all__ = [
    "ReplicationRecord",
    "Estimate",
    "MetricReport",
    "estimate_metrics",
    "metrics_from_counts",
    "sfdp_values",
    "quantile_sfdp",
]


@dataclass(frozen=True)
class ReplicationRecord:
    confusion: Confusion
    sfdp_value: float

    @classmethod
    def from_confusion(cls, c: Confusion, scaling: Scaling) -> "ReplicationRecord":
        return cls(c, sfdp(c, scaling))


@dataclass(frozen=True)
class Estimate:
    estimate: float
    std_error: float
    n_reps: int

    @classmethod
    def of(cls, x: np.ndarray) -> "Estimate":
        n = len(x)
        mean = float(np.mean(x))
        sd = float(np.std(x, ddof=1)) if n > 1 else 0.0
        return cls(mean, sd / math.sqrt(n), n)

    def within(self, bound: float, n_se: float = 3.0) -> bool:
        return self.estimate <= bound + n_se * self.std_error


@dataclass(frozen=True)
class MetricReport:
    """Monte-Carlo estimates; std_error is the sample sd over sqrt(n)."""

    sev: Estimate
    fdr: Estimate
    pfer: Estimate
    pcer: Estimate
    fwer: Estimate
    kfwer: Estimate
    stp: Estimate
    mean_tp: Estimate
    mean_r: Estimate
    gain: Estimate
    k: int
    beta: float
    lam: float
    m: int

    def to_dict(self) -> dict:
        return asdict(self)


def sfdp_values(fp: np.ndarray, r: np.ndarray, scaling: Scaling, m: int) -> np.ndarray:
    """Vectorized FP / s(R), 0 where R == 0."""
    fp = np.asarray(fp)
    r = np.asarray(r)
    s = scaling.values(m)
    denom = s[np.maximum(r, 1) - 1]
    return np.where(r > 0, fp / denom, 0.0)


def metrics_from_counts(
    fp: np.ndarray,
    tp: np.ndarray,
    sfdp_vals: np.ndarray,
    m: int,
    *,
    k: int = 1,
    beta: float = 0.0,
    lam: float = 1.0,
) -> MetricReport:
    """Array form of :func:`estimate_metrics`, used by the simulation engine."""
    fp = np.asarray(fp, dtype=float)
    tp = np.asarray(tp, dtype=float)
    sv = np.asarray(sfdp_vals, dtype=float)
    if len(fp) == 0:
        raise ValueError("need at least one replication")
    if k < 1:
        raise ValueError("k must be >= 1")
    r = fp + tp
    return MetricReport(
        sev=Estimate.of(sv),
        fdr=Estimate.of(fp / np.maximum(r, 1.0)),
        pfer=Estimate.of(fp),
        pcer=Estimate.of(fp / m),
        fwer=Estimate.of((fp > 0).astype(float)),
        kfwer=Estimate.of((fp >= k).astype(float)),
        stp=Estimate.of((sv > beta).astype(float)),
        mean_tp=Estimate.of(tp),
        mean_r=Estimate.of(r),
        gain=Estimate.of(tp - lam * fp),
        k=k,
        beta=beta,
        lam=lam,
        m=m,
    )


def estimate_metrics(
    records: Sequence[ReplicationRecord],
    *,
    k: int = 1,
    beta: float = 0.0,
    lam: float = 1.0,
    scaling: Scaling | None = None,
) -> MetricReport:
    """Aggregate replication records into a :class:`MetricReport`.

    When ``scaling`` is given the SFDP is recomputed from the confusion
    counts; otherwise the stored ``sfdp_value`` is used.
    """
    if not records:
        raise ValueError("need at least one replication record")
    m = records[0].confusion.m
    if any(rec.confusion.m != m for rec in records):
        raise ValueError("records disagree on m")
    fp = np.array([rec.confusion.fp for rec in records], dtype=float)
    tp = np.array([rec.confusion.tp for rec in records], dtype=float)
    if scaling is None:
        sv = np.array([rec.sfdp_value for rec in records], dtype=float)
    else:
        sv = np.array([sfdp(rec.confusion, scaling) for rec in records], dtype=float)
    return metrics_from_counts(fp, tp, sv, m, k=k, beta=beta, lam=lam)


def quantile_sfdp(records: Sequence[ReplicationRecord] | Sequence[float], q: float) -> float:
    """Empirical q-quantile, lower rule: the ceil(q n)-th smallest value."""
    if not 0.0 < q < 1.0:
        raise ValueError("q must lie in (0, 1)")
    vals = [rec.sfdp_value if isinstance(rec, ReplicationRecord) else float(rec) for rec in records]
    if not vals:
        raise ValueError("need at least one value")
    vals.sort()
    x = q * len(vals)
    rank = round(x) if abs(x - round(x)) <= 2.0**-32 else math.ceil(x)
    return vals[max(rank, 1) - 1]

