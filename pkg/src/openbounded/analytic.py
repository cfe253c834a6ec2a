"""Closed-form bias and variance of the two inclusion policies, plus an
exhaustive enumeration oracle that validates every formula in this module.

Two population models are covered. Model 1 is a fixed population with random
daily engagement: every user is exposable from day 1 and is active on each
day independently with probability p. Model 2 is an evolving population with
fixed engagement: a constant number of new users arrives per day per arm and
each is active every day from arrival on. In both, the treatment effect is a
constant tau plus an extra tau_prime on weekend days, and daily outcomes
carry independent Normal(0, sigma^2) noise around a common level c.

The target quantity throughout is the average treatment effect under the
weekly weekend share, tau + (2/7) tau_prime; "bias" means deviation of the
estimator's expectation from that target. Closed forms are only evaluated in
the regime they were derived for (14-day Monday-start window, 7-day bounded
observation); anything else is answered by ``enumeration_oracle``, which
sums over all 2^k presence patterns exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

from .core import (
    ConfigurationError,
    ExperimentCalendar,
    ExperimentError,
    InclusionPolicy,
    PolicyKind,
    Weekday,
)

WEEKEND_SHARE = 2.0 / 7.0
ORACLE_MAX_DAYS = 20

DEFAULT_CALENDAR = ExperimentCalendar(k=14, start_dow=Weekday.MONDAY)


class ClosedFormUnavailable(ExperimentError):
    """The requested configuration is outside the derived closed-form regime."""


@dataclass(frozen=True)
class Model1Params:
    """Fixed population, Bernoulli(p) daily activity."""

    p: float
    tau: float = 0.0
    tau_prime: float = 0.0
    sigma: float = 1.0
    c: float = 0.0
    calendar: ExperimentCalendar = DEFAULT_CALENDAR
    d: int = 7

    def __post_init__(self) -> None:
        if not 0.0 < self.p <= 1.0:
            raise ConfigurationError(f"activity probability must lie in (0, 1], got {self.p}")
        if self.sigma < 0.0:
            raise ConfigurationError(f"noise level must be >= 0, got {self.sigma}")
        if not 1 <= self.d <= self.calendar.k:
            raise ConfigurationError(f"observation length d={self.d} outside 1..{self.calendar.k}")


@dataclass(frozen=True)
class Model2Params:
    """Evolving population: ns arrivals per day per arm, active every day after."""

    ns: int
    tau: float = 0.0
    tau_prime: float = 0.0
    sigma: float = 1.0
    c: float = 0.0
    calendar: ExperimentCalendar = DEFAULT_CALENDAR
    d: int = 7

    def __post_init__(self) -> None:
        if not (isinstance(self.ns, int) and self.ns >= 1):
            raise ConfigurationError(f"arrival count per day must be an integer >= 1, got {self.ns}")
        if self.sigma < 0.0:
            raise ConfigurationError(f"noise level must be >= 0, got {self.sigma}")
        if not 1 <= self.d <= self.calendar.k:
            raise ConfigurationError(f"observation length d={self.d} outside 1..{self.calendar.k}")


@dataclass(frozen=True)
class BiasVarianceReport:
    """Expected bias and variance of the delta estimator for one policy.

    ``variance`` decomposes as ``eta * sigma^2 + zeta * tau_prime^2``: eta
    weights the day-level outcome noise, zeta the weekend-interaction spread.
    """

    policy: InclusionPolicy
    bias: float
    variance: float
    eta: float
    zeta: float


def model1_cohort_size(n_total: float, p: float, i: int) -> float:
    """Expected number of users whose first active day is ``i``: N (1-p)^(i-1) p."""
    if i < 1:
        raise ConfigurationError(f"first active day must be >= 1, got {i}")
    return n_total * (1.0 - p) ** (i - 1) * p


def _effective_d(policy: InclusionPolicy, d: int | None) -> int | None:
    """Reconcile a bounded policy's window with an explicitly passed one."""
    if policy.kind is PolicyKind.BOUNDED:
        if d is not None and d != policy.d:
            raise ConfigurationError(f"policy carries d={policy.d} but d={d} was passed")
        return policy.d
    return d


def _require_model1_regime(
    policy: InclusionPolicy, calendar: ExperimentCalendar, d: int | None
) -> None:
    ok = calendar.k == 14 and calendar.start_dow is Weekday.MONDAY
    if policy.kind is PolicyKind.BOUNDED:
        ok = ok and d == 7
    if not ok:
        raise ClosedFormUnavailable(
            f"closed form unavailable for k={calendar.k}, start={calendar.start_dow.name}, "
            f"d={d}; use enumeration_oracle"
        )


def _bounded_engagement_moments(
    p: float, calendar: ExperimentCalendar, d: int
) -> tuple[float, float, float, float]:
    """Moments of (1/n, w/n, (w/n)^2) over admitted users under Bounded(d).

    n is the number of active days in the d-day window, w the active weekend
    days among them. Decomposes by first-active-day cohort (geometric weight)
    and, within a cohort, by binomial counts of the remaining weekday and
    weekend activations. Exact up to float rounding.
    """
    k = calendar.k
    a = k - d
    weekend = set(calendar.weekend_days())
    e_inv_n = e_ratio = e_ratio_sq = 0.0
    for i in range(1, a + 1):
        cohort_w = (1.0 - p) ** (i - 1) * p
        window = range(i, i + d)
        w_total = sum(1 for t in window if t in weekend)
        w_first = 1 if i in weekend else 0
        free_we = w_total - w_first
        free_wd = (d - 1) - free_we
        for j in range(free_wd + 1):
            pj = math.comb(free_wd, j) * p**j * (1.0 - p) ** (free_wd - j)
            for w in range(free_we + 1):
                pw = math.comb(free_we, w) * p**w * (1.0 - p) ** (free_we - w)
                weight = cohort_w * pj * pw
                n_active = 1 + j + w
                w_active = w_first + w
                ratio = w_active / n_active
                e_inv_n += weight / n_active
                e_ratio += weight * ratio
                e_ratio_sq += weight * ratio * ratio
    admitted = 1.0 - (1.0 - p) ** a
    return e_inv_n / admitted, e_ratio / admitted, e_ratio_sq / admitted, admitted


def _open_engagement_moments(
    p: float, calendar: ExperimentCalendar
) -> tuple[float, float, float, float]:
    """Moments of (1/n, w/n, (w/n)^2) over active users under Open.

    Open always analyzes all of a user's active days, so only the binomial
    counts of active weekdays (i) and active weekend days (j) matter.
    """
    k = calendar.k
    n_weekend = len(calendar.weekend_days())
    n_weekday = k - n_weekend
    e_inv_n = e_ratio = e_ratio_sq = 0.0
    for i in range(n_weekday + 1):
        pi = math.comb(n_weekday, i) * p**i * (1.0 - p) ** (n_weekday - i)
        for j in range(n_weekend + 1):
            if i == 0 and j == 0:
                continue
            pj = math.comb(n_weekend, j) * p**j * (1.0 - p) ** (n_weekend - j)
            weight = pi * pj
            n_active = i + j
            ratio = j / n_active
            e_inv_n += weight / n_active
            e_ratio += weight * ratio
            e_ratio_sq += weight * ratio * ratio
    admitted = 1.0 - (1.0 - p) ** k
    return e_inv_n / admitted, e_ratio / admitted, e_ratio_sq / admitted, admitted


def model1_bias(
    policy: InclusionPolicy,
    p: float,
    tau_prime: float = 1.0,
    calendar: ExperimentCalendar = DEFAULT_CALENDAR,
    d: int | None = None,
) -> float:
    """Expected deviation of the delta estimate from tau + (2/7) tau_prime.

    Open evaluates to zero for every p (the analyzed weekend share of an
    active user is 2/7 in expectation regardless of activity level). Bounded
    is biased because cohorts admitted late see a window whose weekend days
    compete with fewer remaining weekdays; the worst case over p
    underestimates by about 0.068 tau_prime.
    """
    if not 0.0 < p <= 1.0:
        raise ConfigurationError(f"activity probability must lie in (0, 1], got {p}")
    d = _effective_d(policy, d)
    _require_model1_regime(policy, calendar, d)
    if policy.kind is PolicyKind.BOUNDED:
        _, e_ratio, _, _ = _bounded_engagement_moments(p, calendar, d)
    else:
        _, e_ratio, _, _ = _open_engagement_moments(p, calendar)
    return (e_ratio - WEEKEND_SHARE) * tau_prime


def model1_variance_coeffs(
    policy: InclusionPolicy,
    p: float,
    calendar: ExperimentCalendar = DEFAULT_CALENDAR,
    d: int | None = None,
    n_per_arm: int = 1,
) -> tuple[float, float]:
    """Coefficients (eta, zeta) with E[Var(delta)] = eta sigma^2 + zeta tau_prime^2.

    Covers the two-arm design with ``n_per_arm`` users assigned to each arm;
    both coefficients carry the 1 / E[admitted users] scaling, so they halve
    when ``n_per_arm`` doubles. The noise term appears in both arms (hence
    the factor two in eta); the weekend-interaction term only varies in the
    treatment arm.
    """
    if not 0.0 < p <= 1.0:
        raise ConfigurationError(f"activity probability must lie in (0, 1], got {p}")
    if n_per_arm < 1:
        raise ConfigurationError(f"n_per_arm must be >= 1, got {n_per_arm}")
    d = _effective_d(policy, d)
    _require_model1_regime(policy, calendar, d)
    if policy.kind is PolicyKind.BOUNDED:
        e_inv_n, e_ratio, e_ratio_sq, admitted = _bounded_engagement_moments(p, calendar, d)
    else:
        e_inv_n, e_ratio, e_ratio_sq, admitted = _open_engagement_moments(p, calendar)
    expected_users = n_per_arm * admitted
    eta = 2.0 * e_inv_n / expected_users
    zeta = (e_ratio_sq - e_ratio * e_ratio) / expected_users
    return eta, zeta


def open_cohort_weekend_shares(calendar: ExperimentCalendar) -> tuple[float, ...]:
    """Weekend share of days ``[i, k]`` for each arrival day i (always-active users)."""
    k = calendar.k
    weekend = set(calendar.weekend_days())
    shares = []
    for i in range(1, k + 1):
        n_weekend = sum(1 for t in range(i, k + 1) if t in weekend)
        shares.append(n_weekend / (k + 1 - i))
    return tuple(shares)


def model2_bias(
    policy: InclusionPolicy,
    calendar: ExperimentCalendar = DEFAULT_CALENDAR,
    d: int | None = None,
) -> float:
    """Bias of the delta estimate under Model 2, as a coefficient of tau_prime.

    Bounded with a one-week window is exactly unbiased: every admitted user
    contributes 7 consecutive fully-active days, i.e. exactly two weekend
    days. Open overweights late arrivals' calendar position; for a 14-day
    Monday start the coefficient is about +0.19 and it shrinks as the window
    grows.
    """
    d = _effective_d(policy, d)
    if policy.kind is PolicyKind.BOUNDED:
        if d != 7:
            raise ClosedFormUnavailable(
                f"closed form covers one-week windows, got d={d}; use enumeration_oracle"
            )
        if calendar.k <= d:
            raise ConfigurationError(f"no admitted cohorts with k={calendar.k}, d={d}")
        return 0.0
    shares = open_cohort_weekend_shares(calendar)
    return math.fsum(shares) / calendar.k - WEEKEND_SHARE


def model2_variance_coeffs(
    policy: InclusionPolicy,
    calendar: ExperimentCalendar = DEFAULT_CALENDAR,
    d: int | None = None,
    ns: int = 1,
) -> tuple[float, float]:
    """(eta, zeta) such that E[Var(delta)] = eta sigma^2 + zeta tau_prime^2.

    Bounded: each admitted user averages noise over exactly d days and shows
    no weekend-share spread, so eta = 2 / (d (k - d) ns) and zeta = 0.
    Open: arrival-day cohorts of equal size observe 1..k days, giving a
    harmonic noise weight and a weekend-share spread term across cohorts.
    """
    if ns < 1:
        raise ConfigurationError(f"arrival count per day must be >= 1, got {ns}")
    k = calendar.k
    d = _effective_d(policy, d)
    if policy.kind is PolicyKind.BOUNDED:
        if d != 7:
            raise ClosedFormUnavailable(
                f"closed form covers one-week windows, got d={d}; use enumeration_oracle"
            )
        admitted_cohorts = k - d
        if admitted_cohorts < 1:
            raise ConfigurationError(f"no admitted cohorts with k={k}, d={d}")
        eta = 2.0 / (d * admitted_cohorts * ns)
        return eta, 0.0
    shares = open_cohort_weekend_shares(calendar)
    mean_share = math.fsum(shares) / k
    harmonic = math.fsum(1.0 / (k + 1 - i) for i in range(1, k + 1))
    spread = math.fsum((r - mean_share) ** 2 for r in shares)
    eta = 2.0 * harmonic / (k * k * ns)
    zeta = spread / (k * k * ns)
    return eta, zeta


def model2_variance(policy: InclusionPolicy, params: Model2Params) -> float:
    """Expected variance of the delta estimator under Model 2."""
    eta, zeta = model2_variance_coeffs(policy, params.calendar, params.d, params.ns)
    return eta * params.sigma**2 + zeta * params.tau_prime**2


def model1_report(
    policy: InclusionPolicy, params: Model1Params, n_per_arm: int = 1
) -> BiasVarianceReport:
    eta, zeta = model1_variance_coeffs(policy, params.p, params.calendar, params.d, n_per_arm)
    return BiasVarianceReport(
        policy=policy,
        bias=model1_bias(policy, params.p, params.tau_prime, params.calendar, params.d),
        variance=eta * params.sigma**2 + zeta * params.tau_prime**2,
        eta=eta,
        zeta=zeta,
    )


def model2_report(policy: InclusionPolicy, params: Model2Params) -> BiasVarianceReport:
    eta, zeta = model2_variance_coeffs(policy, params.calendar, params.d, params.ns)
    return BiasVarianceReport(
        policy=policy,
        bias=model2_bias(policy, params.calendar, params.d) * params.tau_prime,
        variance=eta * params.sigma**2 + zeta * params.tau_prime**2,
        eta=eta,
        zeta=zeta,
    )


def toy_even_day_ratio(policy: InclusionPolicy, p: float) -> float:
    """Expected even-day share in a fixed 4-day desk example.

    The configuration: a 4-day experiment where days 2 and 4 carry the extra
    effect, analyzed either open or bounded with a 2-day window, counting a
    user excluded by the bounded rule as contributing zero and averaging
    over everyone with any activity. Open recovers the population share 0.5
    for every p; bounded ranges from 0.25 (p -> 0) up to 0.5 (p = 1).
    """
    if not 0.0 < p <= 1.0:
        raise ConfigurationError(f"activity probability must lie in (0, 1], got {p}")
    if policy.kind is PolicyKind.OPEN:
        return 0.5
    numerator = (
        0.5 * p**2
        + p * (1.0 - p) ** 2
        + 0.5 * p**2 * (1.0 - p)
        + 0.5 * p**2 * (1.0 - p) ** 2
    )
    return numerator / (1.0 - (1.0 - p) ** 4)


TOY_CALENDAR = ExperimentCalendar(k=4, start_dow=Weekday.MONDAY)
TOY_EFFECT_DAYS = (2, 4)
TOY_POLICY_BOUNDED = InclusionPolicy(PolicyKind.BOUNDED, d=2)


@dataclass(frozen=True)
class OracleExpectation:
    """Exact expectations from full presence-pattern enumeration.

    ``ratio`` conditions on admission; ``ratio_over_active`` averages over
    every user with any activity, counting the non-admitted as zero (the
    convention of the 4-day desk example). ``metric_mean`` is the expected
    per-user metric of an admitted treatment user with zero noise.
    """

    ratio: float
    ratio_over_active: float
    metric_mean: float
    admission_probability: float
    activity_probability: float


@lru_cache(maxsize=64)
def _pattern_census(
    k: int, effect_mask: int, kind: PolicyKind, d: int | None, deadline: int
) -> tuple[tuple[tuple[int, int, int, int], ...], tuple[int, ...]]:
    """Group the 2^k presence patterns by (total active, analyzed, effect) counts.

    Returns admitted groups as (total_active, analyzed_days, effect_days,
    pattern_count) plus, indexed by total_active, the count of patterns that
    are active somewhere but not admitted. Day t maps to bit t-1.
    """
    census: dict[tuple[int, int, int], int] = {}
    excluded = [0] * (k + 1)
    full_mask = (1 << k) - 1
    for mask in range(1, full_mask + 1):
        total_active = mask.bit_count()
        t0 = (mask & -mask).bit_length()
        if t0 > deadline:
            excluded[total_active] += 1
            continue
        if kind is PolicyKind.BOUNDED:
            window = ((1 << d) - 1) << (t0 - 1)
        else:
            window = full_mask
        analyzed = mask & window
        key = (total_active, analyzed.bit_count(), (analyzed & effect_mask).bit_count())
        census[key] = census.get(key, 0) + 1
    return tuple((*key, count) for key, count in sorted(census.items())), tuple(excluded)


def enumeration_oracle(
    calendar: ExperimentCalendar,
    policy: InclusionPolicy,
    p: float,
    effect_days: tuple[int, ...] | None = None,
    *,
    c: float = 0.0,
    tau: float = 0.0,
    tau_prime: float = 1.0,
    admission_deadline: int | None = None,
) -> OracleExpectation:
    """Brute-force expectations over all 2^k Bernoulli(p) presence patterns.

    Independent of every closed form above: each pattern is weighted by
    p^(active) (1-p)^(inactive), run through the policy's inclusion rule,
    and its effect-day share and per-user metric accumulated exactly.
    ``effect_days`` defaults to the calendar's weekend days.
    ``admission_deadline`` overrides the policy's last admitted first-active
    day (the desk example admits one cohort later than the default rule).
    """
    k = calendar.k
    if k > ORACLE_MAX_DAYS:
        raise ConfigurationError(
            f"enumeration over 2^{k} patterns refused (k > {ORACLE_MAX_DAYS}); use Monte Carlo"
        )
    if not 0.0 < p <= 1.0:
        raise ConfigurationError(f"activity probability must lie in (0, 1], got {p}")
    policy.validate_for(calendar)
    if effect_days is None:
        effect_days = calendar.weekend_days()
    effect_mask = 0
    for t in effect_days:
        calendar.require_day(t)
        effect_mask |= 1 << (t - 1)
    deadline = policy.admission_deadline(calendar) if admission_deadline is None else admission_deadline
    if policy.kind is PolicyKind.BOUNDED and deadline > k - policy.d + 1:
        raise ConfigurationError(
            f"admission deadline {deadline} would push a {policy.d}-day window past day {k}"
        )
    groups, excluded = _pattern_census(k, effect_mask, policy.kind, policy.d, deadline)

    pow_p = [p**a for a in range(k + 1)]
    pow_q = [(1.0 - p) ** a for a in range(k + 1)]
    admitted_prob = 0.0
    ratio_acc = 0.0
    metric_acc = 0.0
    for total_active, analyzed, effect, count in groups:
        weight = count * pow_p[total_active] * pow_q[k - total_active]
        share = effect / analyzed
        admitted_prob += weight
        ratio_acc += weight * share
        metric_acc += weight * (c + tau + tau_prime * share)
    activity_prob = admitted_prob + sum(
        n * pow_p[a] * pow_q[k - a] for a, n in enumerate(excluded) if n
    )
    if admitted_prob <= 0.0:
        raise ConfigurationError("no admissible presence pattern under this configuration")
    return OracleExpectation(
        ratio=ratio_acc / admitted_prob,
        ratio_over_active=ratio_acc / activity_prob,
        metric_mean=metric_acc / admitted_prob,
        admission_probability=admitted_prob,
        activity_probability=activity_prob,
    )
