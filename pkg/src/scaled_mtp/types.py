"""Domain types shared across the package.

Everything here is immutable after construction. Arrays handed out by these
objects are flagged read-only.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Hashable, Iterable

import numpy as np

__all__ = [
    "PValueSet",
    "GroundTruth",
    "Scaling",
    "Constant",
    "Linear",
    "TruncatedLinear",
    "Power",
    "TabulatedScaling",
    "Shape",
    "Identity",
    "HarmonicLinear",
    "TabulatedShape",
    "WeightVector",
    "ThresholdSequence",
    "RejectionOutcome",
    "Confusion",
    "evaluate_scaling",
    "parse_scaling",
    "harmonic_number",
    "confusion",
    "sfdp",
]


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


# ---------------------------------------------------------------------------
# p-values and ground truth
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class PValueSet:
    """The m p-values of a testing problem, keyed by opaque ids.

    Ids are never compared with each other; ties in p are broken by entry
    position, so ``order`` is the stable sort of ``p``.
    ``allow_above_one`` is only used for weight-rescaled values p_i / w_i.
    """

    ids: tuple
    p: np.ndarray
    allow_above_one: bool = False

    def __post_init__(self):
        ids = tuple(self.ids)
        p = _frozen(self.p)
        if p.ndim != 1 or len(p) == 0:
            raise ValueError("need at least one p-value")
        if len(ids) != len(p):
            raise ValueError(f"{len(ids)} ids for {len(p)} p-values")
        if len(set(ids)) != len(ids):
            raise ValueError("hypothesis ids must be unique")
        if np.isnan(p).any() or (p < 0).any():
            raise ValueError("p-values must be non-negative numbers")
        if not self.allow_above_one and (p > 1).any():
            raise ValueError("p-values must lie in [0, 1]")
        order = np.argsort(p, kind="stable")
        order.setflags(write=False)
        object.__setattr__(self, "ids", ids)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "_order", order)

    @classmethod
    def from_values(cls, values: Iterable[float], ids: Iterable[Hashable] | None = None):
        values = list(values)
        if ids is None:
            ids = range(len(values))
        return cls(tuple(ids), values)

    @property
    def m(self) -> int:
        return len(self.p)

    @property
    def order(self) -> np.ndarray:
        """Entry positions sorted by (p, position)."""
        return self._order

    @property
    def sorted_p(self) -> np.ndarray:
        return self.p[self._order]

    def ranks(self) -> np.ndarray:
        """1-based rank of every entry under the stable ordering."""
        r = np.empty(self.m, dtype=int)
        r[self._order] = np.arange(1, self.m + 1)
        return r

    def __len__(self):
        return self.m

    def __repr__(self):
        return f"PValueSet(m={self.m})"


@dataclass(frozen=True)
class GroundTruth:
    """Which hypotheses are true nulls. Only simulation and metrics use it."""

    null_ids: frozenset
    alternative_ids: frozenset

    def __post_init__(self):
        nulls = frozenset(self.null_ids)
        alts = frozenset(self.alternative_ids)
        if nulls & alts:
            raise ValueError("an id cannot be both null and alternative")
        object.__setattr__(self, "null_ids", nulls)
        object.__setattr__(self, "alternative_ids", alts)

    @property
    def m0(self) -> int:
        return len(self.null_ids)

    @property
    def m1(self) -> int:
        return len(self.alternative_ids)

    @property
    def m(self) -> int:
        return self.m0 + self.m1


# ---------------------------------------------------------------------------
# scaling functions s: {1..m} -> (0, inf)
# ---------------------------------------------------------------------------


class Scaling:
    """Base class for non-decreasing positive scaling functions on ranks."""

    def values(self, m: int) -> np.ndarray:
        """s(1), ..., s(m) as a float array."""
        self.check(m)
        return self._values(np.arange(1, m + 1, dtype=float))

    def __call__(self, r: int, m: int | None = None) -> float:
        return evaluate_scaling(self, r, m)

    def check(self, m: int) -> None:
        if m < 1:
            raise ValueError("m must be >= 1")

    def _values(self, r: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def describe(self) -> str:
        raise NotImplementedError


@dataclass(frozen=True)
class Constant(Scaling):
    c: float = 1.0

    def __post_init__(self):
        if not self.c > 0:
            raise ValueError("constant scaling needs c > 0")

    def _values(self, r):
        return np.full_like(r, float(self.c))

    def describe(self):
        return f"constant:{self.c:g}"


@dataclass(frozen=True)
class Linear(Scaling):
    def _values(self, r):
        return r.copy()

    def describe(self):
        return "linear"


@dataclass(frozen=True)
class TruncatedLinear(Scaling):
    """s(r) = min(r, tau); tau = 1 gives Bonferroni, tau = m gives BH."""

    tau: int

    def __post_init__(self):
        if int(self.tau) != self.tau or self.tau < 1:
            raise ValueError("tau must be a positive integer")
        object.__setattr__(self, "tau", int(self.tau))

    def check(self, m):
        super().check(m)
        if self.tau > m:
            raise ValueError(f"tau={self.tau} exceeds m={m}")

    def _values(self, r):
        return np.minimum(r, float(self.tau))

    def describe(self):
        return f"truncated:{self.tau}"


@dataclass(frozen=True)
class Power(Scaling):
    """s(r) = r**gamma with gamma in [0, 1]."""

    gamma: float

    def __post_init__(self):
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError("gamma must lie in [0, 1]")

    def _values(self, r):
        if self.gamma == 0.0:
            return np.ones_like(r)
        if self.gamma == 1.0:
            return r.copy()
        return r**self.gamma

    def describe(self):
        return f"power:{self.gamma:g}"


@dataclass(frozen=True, eq=False)
class TabulatedScaling(Scaling):
    """Explicit s(1..m). Positivity and monotonicity are checked up front."""

    table: np.ndarray

    def __post_init__(self):
        t = _frozen(self.table)
        if t.ndim != 1 or len(t) == 0:
            raise ValueError("tabulated scaling needs at least one value")
        if not np.all(t > 0):
            raise ValueError("tabulated scaling values must be positive")
        if np.any(np.diff(t) < 0):
            raise ValueError("tabulated scaling must be non-decreasing")
        object.__setattr__(self, "table", t)

    def check(self, m):
        super().check(m)
        if len(self.table) != m:
            raise ValueError(f"tabulated scaling has {len(self.table)} values, m={m}")

    def _values(self, r):
        return self.table[r.astype(int) - 1].copy()

    def describe(self):
        return "tabulated:" + ",".join(repr(float(v)) for v in self.table)


def evaluate_scaling(spec: Scaling, r: int, m: int | None = None) -> float:
    """s(r) for a single rank. ``m`` defaults to the table length or to r."""
    if m is None:
        m = len(spec.table) if isinstance(spec, TabulatedScaling) else r
    if int(r) != r or not 1 <= r <= m:
        raise ValueError(f"rank {r} outside 1..{m}")
    spec.check(m)
    return float(spec._values(np.array([float(r)]))[0])


def parse_scaling(text: str) -> Scaling:
    """Parse descriptors like ``linear``, ``constant:3``, ``power:0.5``,
    ``truncated:10`` or ``tabulated:1,2,2.5``."""
    name, _, arg = text.strip().partition(":")
    name = name.lower()
    try:
        if name == "linear" and not arg:
            return Linear()
        if name == "constant":
            return Constant(float(arg) if arg else 1.0)
        if name in ("truncated", "truncated-linear", "tau"):
            tau = float(arg)
            if tau != int(tau):
                raise ValueError("tau must be an integer")
            return TruncatedLinear(int(tau))
        if name == "power":
            return Power(float(arg))
        if name == "tabulated":
            return TabulatedScaling([float(v) for v in arg.split(",")])
    except ValueError as exc:
        raise ValueError(f"bad scaling {text!r}: {exc}") from None
    raise ValueError(f"unknown scaling {text!r}")


# ---------------------------------------------------------------------------
# shape functions xi, applied to s(r)
# ---------------------------------------------------------------------------


def harmonic_number(m: int) -> float:
    """1 + 1/2 + ... + 1/m, added smallest term first."""
    total = 0.0
    for i in range(m, 0, -1):
        total += 1.0 / i
    return total


class Shape:
    def apply(self, x: np.ndarray, m: int) -> np.ndarray:
        raise NotImplementedError

    def describe(self) -> str:
        raise NotImplementedError


@dataclass(frozen=True)
class Identity(Shape):
    def apply(self, x, m):
        return np.asarray(x, dtype=float)

    def describe(self):
        return "identity"


@dataclass(frozen=True)
class HarmonicLinear(Shape):
    """xi(x) = x / H_m, the Benjamini-Yekutieli shape."""

    def apply(self, x, m):
        return np.asarray(x, dtype=float) / harmonic_number(m)

    def describe(self):
        return "harmonic"


@dataclass(frozen=True, eq=False)
class TabulatedShape(Shape):
    """Piecewise-linear xi through the knots (xs[j], ys[j]).

    Exact at the knots, constant beyond the end knots.
    """

    xs: np.ndarray
    ys: np.ndarray

    def __post_init__(self):
        xs, ys = _frozen(self.xs), _frozen(self.ys)
        if xs.ndim != 1 or len(xs) == 0 or xs.shape != ys.shape:
            raise ValueError("shape knots need matching non-empty xs and ys")
        if np.any(np.diff(xs) <= 0):
            raise ValueError("shape knot positions must be strictly increasing")
        if np.any(np.diff(ys) < 0) or not np.all(ys > 0):
            raise ValueError("shape values must be positive and non-decreasing")
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)

    @classmethod
    def inverse_of(cls, scaling: Scaling, m: int) -> "TabulatedShape":
        """xi = s^{-1} on ranks: knots (s(i), i). Needs s strictly increasing."""
        return cls(scaling.values(m), np.arange(1, m + 1, dtype=float))

    def apply(self, x, m):
        return np.interp(np.asarray(x, dtype=float), self.xs, self.ys)

    def describe(self):
        return f"tabulated[{len(self.xs)} knots]"


# ---------------------------------------------------------------------------
# weights, thresholds, outcomes
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class WeightVector:
    weights: np.ndarray

    def __post_init__(self):
        w = _frozen(self.weights)
        if w.ndim != 1 or len(w) == 0:
            raise ValueError("weights must be a non-empty vector")
        if not np.all(np.isfinite(w)) or not np.all(w > 0):
            raise ValueError("weights must be positive and finite")
        object.__setattr__(self, "weights", w)

    @classmethod
    def unit(cls, m: int) -> "WeightVector":
        return cls(np.ones(m))

    @property
    def is_unit(self) -> bool:
        return bool(np.all(self.weights == 1.0))

    def __len__(self):
        return len(self.weights)


@dataclass(frozen=True, eq=False)
class ThresholdSequence:
    """Non-decreasing critical values t_1..t_m, each in [0, 1].

    ``meta`` carries the parameters that produced the sequence plus any
    warnings raised while building it (clamping, empty correction sums).
    """

    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        v = _frozen(self.values)
        if v.ndim != 1 or len(v) == 0:
            raise ValueError("threshold sequence must be non-empty")
        if np.any(np.diff(v) < 0):
            raise ValueError("thresholds must be non-decreasing")
        if np.any(v < 0) or np.any(v > 1):
            raise ValueError("thresholds must lie in [0, 1]")
        object.__setattr__(self, "values", v)

    @property
    def m(self) -> int:
        return len(self.values)

    def __len__(self):
        return len(self.values)

    def __getitem__(self, i):
        return self.values[i]


@dataclass(frozen=True)
class RejectionOutcome:
    """Hypotheses of ranks 1..U are rejected; R == U always."""

    rejected_ids: frozenset
    U: int

    def __post_init__(self):
        object.__setattr__(self, "rejected_ids", frozenset(self.rejected_ids))
        if len(self.rejected_ids) != self.U:
            raise ValueError("rejection set size must equal U")

    @classmethod
    def from_rank(cls, pvals: PValueSet, U: int) -> "RejectionOutcome":
        ids = pvals.ids
        return cls(frozenset(ids[j] for j in pvals.order[:U]), int(U))

    @property
    def R(self) -> int:
        return self.U


@dataclass(frozen=True)
class Confusion:
    fp: int
    tp: int
    fn: int
    tn: int

    def __post_init__(self):
        if min(self.fp, self.tp, self.fn, self.tn) < 0:
            raise ValueError("confusion counts must be non-negative")

    @property
    def R(self) -> int:
        return self.fp + self.tp

    @property
    def m0(self) -> int:
        return self.fp + self.tn

    @property
    def m1(self) -> int:
        return self.tp + self.fn

    @property
    def m(self) -> int:
        return self.m0 + self.m1


def confusion(outcome: RejectionOutcome, truth: GroundTruth) -> Confusion:
    unknown = outcome.rejected_ids - truth.null_ids - truth.alternative_ids
    if unknown:
        raise ValueError(f"rejected ids not in ground truth: {sorted(map(str, unknown))[:5]}")
    fp = len(outcome.rejected_ids & truth.null_ids)
    tp = len(outcome.rejected_ids & truth.alternative_ids)
    return Confusion(fp=fp, tp=tp, fn=truth.m1 - tp, tn=truth.m0 - fp)


def sfdp(c: Confusion, spec: Scaling) -> float:
    """FP / s(R), and 0 when nothing is rejected."""
    if c.R == 0:
        return 0.0
    m = None if isinstance(spec, TabulatedScaling) else c.m
    return c.fp / evaluate_scaling(spec, c.R, m)
