"""Multiple testing with scaled false discovery proportions.

The error rate FP / s(R) interpolates between per-family error control
(constant s) and false discovery control (linear s). This package builds the
matching step-up and step-down procedures, estimates error rates by
simulation and studies the choice of s through a gain criterion.
"""

__version__ = "0.1.0"

from .types import (  # noqa: E402
    Confusion,
    Constant,
    GroundTruth,
    HarmonicLinear,
    Identity,
    Linear,
    Power,
    PValueSet,
    RejectionOutcome,
    Scaling,
    Shape,
    TabulatedScaling,
    TabulatedShape,
    ThresholdSequence,
    TruncatedLinear,
    WeightVector,
    confusion,
    evaluate_scaling,
    parse_scaling,
    sfdp,
)
from .procedures import (  # noqa: E402
    SevProcedureConfig,
    StpProcedureConfig,
    correction_constant,
    run_sev_procedure,
    run_stp_procedure,
    sev_thresholds,
    step_down,
    step_up,
    stp_thresholds,
    weighted_transform,
)
from .metrics import MetricReport, ReplicationRecord, estimate_metrics, quantile_sfdp  # noqa: E402
