"""Double-average metric, delta estimation, and the two-sample significance test.

The metric is a mean of means: each included user's outcomes are averaged
over their active days inside the inclusion interval, and the group value is
the average of those per-user means. Everything operates on immutable traces
and is deterministic for a fixed input ordering.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .core import (
    ExperimentCalendar,
    InclusionInterval,
    InclusionPolicy,
    InsufficientDataError,
    UserTrace,
    Variant,
    inclusion_interval,
)


class TestKind(enum.Enum):
    __test__ = False

    Z = "z"
    WELCH = "welch"


@dataclass(frozen=True)
class GroupSummary:
    """Per-arm summary: user count, mean metric, unbiased sample variance.

    ``mean`` is NaN when the group is empty and ``sample_variance`` is NaN
    below two users.
    """

    n: int
    mean: float
    sample_variance: float

    @property
    def is_empty(self) -> bool:
        return self.n == 0


@dataclass(frozen=True)
class AnalysisResult:
    policy: InclusionPolicy
    delta: float
    variance: float
    n_treatment: int
    n_control: int
    statistic: float
    p_value: float


@dataclass(frozen=True)
class MetricTable:
    """Per-user analysis inputs aligned with the trace collection order.

    ``variants`` codes treatment as 1, control as 0, unassigned as -1.
    ``included`` marks users admitted by the policy; ``values`` holds their
    per-user metric (NaN where not included).
    """

    variants: np.ndarray
    included: np.ndarray
    values: np.ndarray


def user_metric(trace: UserTrace, interval: InclusionInterval) -> float:
    """Mean outcome over the user's active days inside ``interval``.

    The interval must come from ``inclusion_interval`` for this trace, which
    guarantees at least one active day; a window with none is a logic error.
    """
    lo, hi = trace.slice_indices(interval)
    if hi == lo:
        raise ValueError(
            f"user {trace.user_id}: no active days in [{interval.start}, {interval.end}]; "
            "interval does not belong to this trace"
        )
    return math.fsum(trace.values[lo:hi]) / (hi - lo)


def metric_table(
    traces: Sequence[UserTrace], policy: InclusionPolicy, calendar: ExperimentCalendar
) -> MetricTable:
    """Apply the inclusion rule to every trace and compute per-user metrics."""
    policy.validate_for(calendar)
    n = len(traces)
    variants = np.full(n, -1, dtype=np.int8)
    included = np.zeros(n, dtype=bool)
    values = np.full(n, np.nan)
    for i, trace in enumerate(traces):
        if trace.variant is Variant.TREATMENT:
            variants[i] = 1
        elif trace.variant is Variant.CONTROL:
            variants[i] = 0
        t0 = trace.first_active_day
        if t0 is None:
            continue
        interval = inclusion_interval(policy, t0, calendar)
        if interval is None:
            continue
        lo, hi = trace.slice_indices(interval)
        included[i] = True
        values[i] = sum(trace.values[lo:hi]) / (hi - lo)
    return MetricTable(variants=variants, included=included, values=values)


def group_summary(
    traces: Sequence[UserTrace],
    variant: Variant,
    policy: InclusionPolicy,
    calendar: ExperimentCalendar,
) -> GroupSummary:
    """Summarize the per-user metric for one arm under one inclusion policy."""
    table = metric_table(traces, policy, calendar)
    code = 1 if variant is Variant.TREATMENT else 0
    vals = table.values[(table.variants == code) & table.included]
    return summarize_values(vals)


def summarize_values(values: np.ndarray) -> GroupSummary:
    n = int(values.size)
    if n == 0:
        return GroupSummary(n=0, mean=math.nan, sample_variance=math.nan)
    mean = float(values.mean())
    var = float(values.var(ddof=1)) if n >= 2 else math.nan
    return GroupSummary(n=n, mean=mean, sample_variance=var)


def delta_from_samples(
    treatment: np.ndarray,
    control: np.ndarray,
    policy: InclusionPolicy,
    test: TestKind = TestKind.Z,
) -> AnalysisResult:
    """Difference in means with the unpooled (per-arm) variance estimate."""
    n_t, n_c = int(treatment.size), int(control.size)
    if n_t < 2:
        raise InsufficientDataError(f"treatment group has {n_t} included users; need >= 2")
    if n_c < 2:
        raise InsufficientDataError(f"control group has {n_c} included users; need >= 2")
    delta = float(treatment.mean() - control.mean())
    vt = float(treatment.var(ddof=1))
    vc = float(control.var(ddof=1))
    variance = vt / n_t + vc / n_c
    statistic, p_value = _two_sided_test(delta, variance, vt, n_t, vc, n_c, test)
    return AnalysisResult(
        policy=policy,
        delta=delta,
        variance=variance,
        n_treatment=n_t,
        n_control=n_c,
        statistic=statistic,
        p_value=p_value,
    )


def _two_sided_test(
    delta: float, variance: float, vt: float, n_t: int, vc: float, n_c: int, test: TestKind
) -> tuple[float, float]:
    if variance <= 0.0:
        # Deterministic outcomes: any nonzero difference is certain.
        if delta == 0.0:
            return 0.0, 1.0
        return math.copysign(math.inf, delta), 0.0
    statistic = delta / math.sqrt(variance)
    if test is TestKind.Z:
        p_value = math.erfc(abs(statistic) / math.sqrt(2.0))
    else:
        from scipy import stats

        df = variance**2 / ((vt / n_t) ** 2 / (n_t - 1) + (vc / n_c) ** 2 / (n_c - 1))
        p_value = 2.0 * float(stats.t.sf(abs(statistic), df))
    return statistic, min(max(p_value, 0.0), 1.0)


def delta_estimate(
    traces: Sequence[UserTrace],
    policy: InclusionPolicy,
    calendar: ExperimentCalendar,
    test: TestKind = TestKind.Z,
) -> AnalysisResult:
    """Estimate the treatment effect under one inclusion policy.

    Returns the treatment-minus-control difference of the per-user metric
    means, its estimated variance ``S_T^2/N_T + S_C^2/N_C``, and a two-sided
    p-value (normal approximation by default, Welch t on request).
    """
    table = metric_table(traces, policy, calendar)
    treatment = table.values[(table.variants == 1) & table.included]
    control = table.values[(table.variants == 0) & table.included]
    return delta_from_samples(treatment, control, policy, test)


def weekend_ratio_gamma(
    traces: Iterable[UserTrace], policy: InclusionPolicy, calendar: ExperimentCalendar
) -> float:
    """Mean over included users of weekend active days / all active days.

    A weekend-only additive effect of size x shifts the expected estimate by
    gamma * x, so this is the scale factor that converts a weekend effect
    into an average effect over the analyzed sample.
    """
    policy.validate_for(calendar)
    weekend = set(calendar.weekend_days())
    total = 0.0
    n = 0
    for trace in traces:
        t0 = trace.first_active_day
        if t0 is None:
            continue
        interval = inclusion_interval(policy, t0, calendar)
        if interval is None:
            continue
        lo, hi = trace.slice_indices(interval)
        active = hi - lo
        if active == 0:
            raise ValueError(f"user {trace.user_id}: empty inclusion interval")
        weekend_active = sum(1 for t in trace.days[lo:hi] if t in weekend)
        total += weekend_active / active
        n += 1
    if n == 0:
        raise InsufficientDataError("no users admitted under the policy")
    return total / n
