"""Open vs. bounded data-inclusion analysis for online controlled experiments."""

__version__ = "0.1.0"

from .analytic import (
    DEFAULT_CALENDAR,
    WEEKEND_SHARE,
    BiasVarianceReport,
    ClosedFormUnavailable,
    Model1Params,
    Model2Params,
    OracleExpectation,
    enumeration_oracle,
    model1_bias,
    model1_cohort_size,
    model1_report,
    model1_variance_coeffs,
    model2_bias,
    model2_report,
    model2_variance,
    model2_variance_coeffs,
    open_cohort_weekend_shares,
    toy_even_day_ratio,
)
from .core import (
    OPEN,
    ConfigurationError,
    DataFormatError,
    ExperimentCalendar,
    ExperimentError,
    InclusionInterval,
    InclusionPolicy,
    InsufficientDataError,
    PolicyKind,
    UserTrace,
    Variant,
    Weekday,
    bounded,
    first_active_day,
    inclusion_interval,
    is_weekend,
)
from .eventlog import EventLogRecord, IngestReport, read_event_log, write_event_log
from .metrics import (
    AnalysisResult,
    GroupSummary,
    TestKind,
    delta_estimate,
    group_summary,
    user_metric,
    weekend_ratio_gamma,
)
from .power import PowerCurve, PowerCurvePoint, compare_policies, power_curve
from .simulate import (
    EffectKind,
    EffectSpec,
    Seed,
    inject_effect,
    simulate_model1,
    simulate_model2,
    strip_variants,
)

__all__ = [
    "AnalysisResult",
    "BiasVarianceReport",
    "ClosedFormUnavailable",
    "ConfigurationError",
    "DataFormatError",
    "DEFAULT_CALENDAR",
    "EffectKind",
    "EffectSpec",
    "EventLogRecord",
    "ExperimentCalendar",
    "ExperimentError",
    "GroupSummary",
    "InclusionInterval",
    "InclusionPolicy",
    "IngestReport",
    "InsufficientDataError",
    "Model1Params",
    "Model2Params",
    "OPEN",
    "OracleExpectation",
    "PolicyKind",
    "PowerCurve",
    "PowerCurvePoint",
    "Seed",
    "TestKind",
    "UserTrace",
    "Variant",
    "Weekday",
    "WEEKEND_SHARE",
    "bounded",
    "compare_policies",
    "delta_estimate",
    "enumeration_oracle",
    "first_active_day",
    "group_summary",
    "inclusion_interval",
    "inject_effect",
    "is_weekend",
    "model1_bias",
    "model1_cohort_size",
    "model1_report",
    "model1_variance_coeffs",
    "model2_bias",
    "model2_report",
    "model2_variance",
    "model2_variance_coeffs",
    "open_cohort_weekend_shares",
    "power_curve",
    "read_event_log",
    "simulate_model1",
    "simulate_model2",
    "strip_variants",
    "toy_even_day_ratio",
    "user_metric",
    "weekend_ratio_gamma",
    "write_event_log",
]
