"""Monte-Carlo trace generators and replay-style effect injection.

Every generator is deterministic: the same parameters and seed always
produce the same trace collection, byte for byte after serialization. Each
user's randomness occupies a fixed block (one matrix row) keyed by user
index, so a user's draws never depend on other users' activity.
"""

from __future__ import annotations

import enum
import hashlib
import math
from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np

from .analytic import Model1Params, Model2Params
from .core import (
    ConfigurationError,
    ExperimentCalendar,
    InsufficientDataError,
    UserTrace,
    Variant,
)

NoiseKind = Literal["normal", "lognormal"]


@dataclass(frozen=True)
class Seed:
    """Reproducibility root. Child streams are pure functions of (base, indices)."""

    base: int

    def __post_init__(self) -> None:
        if not 0 <= self.base < 2**64:
            raise ConfigurationError(f"seed must be a 64-bit unsigned integer, got {self.base}")

    def sequence(self, *indices: int) -> np.random.SeedSequence:
        return np.random.SeedSequence((self.base, *indices))

    def generator(self, *indices: int) -> np.random.Generator:
        return np.random.default_rng(self.sequence(*indices))

    def derive(self, *indices: int) -> "Seed":
        return Seed(int(self.sequence(*indices).generate_state(1, dtype=np.uint64)[0]))


class EffectKind(enum.Enum):
    ABSOLUTE = "absolute"
    RELATIVE_LIFT = "relative"


@dataclass(frozen=True)
class EffectSpec:
    """Injected treatment effect: base tau plus tau_prime extra on weekends.

    RELATIVE_LIFT reads both as fractions of the realized control-arm mean
    outcome (0.01 means a 1% average lift); ABSOLUTE adds them as-is.
    """

    kind: EffectKind
    tau: float
    tau_prime: float = 0.0


def _weekend_row(calendar: ExperimentCalendar) -> np.ndarray:
    return np.array([calendar.is_weekend(t) for t in calendar.days()], dtype=float)


def _noise_matrix(
    rng: np.random.Generator, shape: tuple[int, int], sigma: float, kind: NoiseKind
) -> np.ndarray:
    if kind == "normal":
        return rng.normal(0.0, sigma, shape) if sigma > 0 else np.zeros(shape)
    if kind == "lognormal":
        # Zero-mean heavy-tailed noise; sigma acts as the log-scale shape.
        return rng.lognormal(0.0, sigma, shape) - np.exp(sigma**2 / 2.0)
    raise ConfigurationError(f"unknown noise kind: {kind!r}")


def _build_trace(user_id: str, variant: Variant, days: np.ndarray, row: np.ndarray) -> UserTrace:
    return UserTrace(
        user_id=user_id,
        variant=variant,
        days=tuple(int(t) for t in days),
        values=tuple(float(v) for v in row[days - 1]),
    )


def simulate_model1(
    params: Model1Params,
    n_per_arm: int,
    seed: Seed,
    *,
    sigma_user: float = 0.0,
    noise_kind: NoiseKind = "normal",
) -> list[UserTrace]:
    """Fixed-population traces: Bernoulli(p) presence on every day.

    Generates ``n_per_arm`` treatment users followed by ``n_per_arm``
    control users. Active-day outcomes are c (optionally per-user
    heterogeneous with spread ``sigma_user``) plus the treatment effect and
    a fresh noise draw per user-day. Users who never show up are emitted
    with no active days and fall out of any downstream analysis.
    """
    if n_per_arm < 1:
        raise ConfigurationError(f"n_per_arm must be >= 1, got {n_per_arm}")
    calendar = params.calendar
    k = calendar.k
    total = 2 * n_per_arm
    rng = seed.generator()
    presence = rng.random((total, k)) < params.p
    levels = np.full(total, params.c)
    if sigma_user > 0.0:
        levels = levels + rng.normal(0.0, sigma_user, total)
    noise = _noise_matrix(rng, (total, k), params.sigma, noise_kind)

    weekend = _weekend_row(calendar)
    effect = params.tau + params.tau_prime * weekend
    traces: list[UserTrace] = []
    for u in range(total):
        treated = u < n_per_arm
        row = levels[u] + noise[u]
        if treated:
            row = row + effect
        days = np.flatnonzero(presence[u]) + 1
        variant = Variant.TREATMENT if treated else Variant.CONTROL
        traces.append(_build_trace(f"u{u:07d}", variant, days, row))
    return traces


def simulate_model2(
    params: Model2Params,
    seed: Seed,
    *,
    sigma_user: float = 0.0,
    noise_kind: NoiseKind = "normal",
) -> list[UserTrace]:
    """Evolving-population traces: ``ns`` arrivals per day per arm, then
    present every remaining day.

    Per arm there are ``k * ns`` users; the user arriving on day i is active
    on exactly days i..k. Outcome structure matches ``simulate_model1``.
    """
    calendar = params.calendar
    k = calendar.k
    per_arm = k * params.ns
    total = 2 * per_arm
    rng = seed.generator()
    levels = np.full(total, params.c)
    if sigma_user > 0.0:
        levels = levels + rng.normal(0.0, sigma_user, total)
    noise = _noise_matrix(rng, (total, k), params.sigma, noise_kind)

    weekend = _weekend_row(calendar)
    effect = params.tau + params.tau_prime * weekend
    traces: list[UserTrace] = []
    all_days = np.arange(1, k + 1)
    for u in range(total):
        treated = u < per_arm
        arrival = (u % per_arm) // params.ns + 1
        row = levels[u] + noise[u]
        if treated:
            row = row + effect
        days = all_days[arrival - 1 :]
        variant = Variant.TREATMENT if treated else Variant.CONTROL
        traces.append(_build_trace(f"u{u:07d}", variant, days, row))
    return traces


def strip_variants(traces: Sequence[UserTrace]) -> list[UserTrace]:
    """Drop variant assignments, e.g. to replay a log through ``inject_effect``."""
    return [UserTrace(t.user_id, None, t.days, t.values) for t in traces]


def _assign_treatment(seed: Seed, user_id: str) -> bool:
    # Stable fair coin: order-invariant, pure function of (seed, user_id).
    digest = hashlib.blake2b(
        user_id.encode("utf-8"), digest_size=8, key=seed.base.to_bytes(8, "little")
    ).digest()
    return bool(digest[0] & 1)


def inject_effect(
    traces: Sequence[UserTrace],
    spec: EffectSpec,
    calendar: ExperimentCalendar,
    assignment_seed: Seed,
) -> list[UserTrace]:
    """Randomize variants 50/50 and add the effect to treatment outcomes.

    Control traces keep their activity pattern and outcomes untouched;
    treatment traces get the effect added on every active day, with the
    weekend extra on weekend days. Input traces must not carry variants.
    """
    if not traces:
        raise InsufficientDataError("cannot inject an effect into an empty trace collection")
    for trace in traces:
        if trace.variant is not None:
            raise ConfigurationError(
                f"user {trace.user_id} already carries a variant; refusing to reassign"
            )
    assignments = [_assign_treatment(assignment_seed, t.user_id) for t in traces]

    if spec.kind is EffectKind.RELATIVE_LIFT:
        control_values = [
            v for t, a in zip(traces, assignments) if not a for v in t.values
        ]
        if not control_values:
            raise InsufficientDataError("no control outcomes to anchor the relative lift")
        base = math.fsum(control_values) / len(control_values)
    else:
        base = 1.0
    tau = spec.tau * base
    tau_prime = spec.tau_prime * base

    weekend = set(calendar.weekend_days())
    out: list[UserTrace] = []
    for trace, treated in zip(traces, assignments):
        for t in trace.days:
            calendar.require_day(t)
        if not treated:
            out.append(UserTrace(trace.user_id, Variant.CONTROL, trace.days, trace.values))
            continue
        values = tuple(
            v + tau + (tau_prime if t in weekend else 0.0)
            for t, v in zip(trace.days, trace.values)
        )
        out.append(UserTrace(trace.user_id, Variant.TREATMENT, trace.days, values))
    return out
