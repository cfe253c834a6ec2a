"""Experiment calendar, user traces, and the open/bounded inclusion rules.

Day indices are 1-based integers in ``1..k``. All types are immutable after
construction and all operations are pure functions, so everything here is
safe to share across threads.
"""

from __future__ import annotations

import enum
from bisect import bisect_left, bisect_right
from dataclasses import dataclass

DayIndex = int


class ExperimentError(Exception):
    """Base class for errors raised by this package."""


class ConfigurationError(ExperimentError):
    """A parameter combination that can never describe a valid run."""


class DataFormatError(ExperimentError):
    """Input data that cannot be parsed or fails validation."""


class InsufficientDataError(ExperimentError):
    """Valid input that is too small for the requested computation."""


class Weekday(enum.IntEnum):
    MONDAY = 0
    TUESDAY = 1
    WEDNESDAY = 2
    THURSDAY = 3
    FRIDAY = 4
    SATURDAY = 5
    SUNDAY = 6

    @classmethod
    def parse(cls, name: str) -> "Weekday":
        key = name.strip().upper()
        for member in cls:
            if member.name == key or member.name[:3] == key:
                return member
        raise ConfigurationError(f"unknown weekday: {name!r}")


class Variant(enum.Enum):
    TREATMENT = "T"
    CONTROL = "C"


@dataclass(frozen=True)
class ExperimentCalendar:
    """Experiment window of ``k`` days whose first day falls on ``start_dow``."""

    k: int
    start_dow: Weekday = Weekday.MONDAY

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ConfigurationError(f"experiment length must be >= 1 day, got {self.k}")

    def weekday_of(self, t: DayIndex) -> Weekday:
        self.require_day(t)
        return Weekday((self.start_dow + t - 1) % 7)

    def is_weekend(self, t: DayIndex) -> bool:
        return self.weekday_of(t) in (Weekday.SATURDAY, Weekday.SUNDAY)

    def weekend_days(self) -> tuple[DayIndex, ...]:
        return tuple(t for t in self.days() if self.is_weekend(t))

    def days(self) -> range:
        return range(1, self.k + 1)

    def require_day(self, t: DayIndex) -> None:
        if not 1 <= t <= self.k:
            raise ConfigurationError(f"day {t} outside experiment window 1..{self.k}")


def is_weekend(t: DayIndex, calendar: ExperimentCalendar) -> bool:
    """True iff day ``t`` falls on Saturday or Sunday."""
    return calendar.is_weekend(t)


class PolicyKind(enum.Enum):
    OPEN = "open"
    BOUNDED = "bounded"


@dataclass(frozen=True)
class InclusionPolicy:
    """Which user-days enter the analysis.

    Open includes every active user from their first active day through day
    ``k``. Bounded(d) includes only users first active on or before the
    admission deadline ``k - d``, each observed for exactly ``d`` days from
    first activity.
    """

    kind: PolicyKind
    d: int | None = None

    def __post_init__(self) -> None:
        if self.kind is PolicyKind.BOUNDED:
            if self.d is None or self.d < 1:
                raise ConfigurationError("bounded policy requires an observation length d >= 1")
        elif self.d is not None:
            raise ConfigurationError("open policy takes no observation length")

    @property
    def label(self) -> str:
        return self.kind.value

    def validate_for(self, calendar: ExperimentCalendar) -> None:
        if self.kind is PolicyKind.BOUNDED and self.d > calendar.k:
            raise ConfigurationError(
                f"observation length d={self.d} exceeds experiment length k={calendar.k}"
            )

    def admission_deadline(self, calendar: ExperimentCalendar) -> DayIndex:
        """Last first-active day admitted: ``k - d`` for bounded, ``k`` for open."""
        self.validate_for(calendar)
        if self.kind is PolicyKind.BOUNDED:
            return calendar.k - self.d
        return calendar.k


OPEN = InclusionPolicy(PolicyKind.OPEN)


def bounded(d: int) -> InclusionPolicy:
    return InclusionPolicy(PolicyKind.BOUNDED, d)


@dataclass(frozen=True)
class InclusionInterval:
    """Closed interval of days ``[start, end]`` analyzed for one user."""

    start: DayIndex
    end: DayIndex

    def __post_init__(self) -> None:
        if self.start > self.end:
            raise ConfigurationError(f"empty interval [{self.start}, {self.end}]")

    def contains(self, t: DayIndex) -> bool:
        return self.start <= t <= self.end

    def days(self) -> range:
        return range(self.start, self.end + 1)


@dataclass(frozen=True)
class UserTrace:
    """One user's activity: sorted active days and the outcome on each.

    ``days`` holds the active day indices in strictly increasing order and
    ``values`` the outcome observed on each; a day is absent exactly when the
    user was not active on it.
    """

    user_id: str
    variant: Variant | None
    days: tuple[DayIndex, ...]
    values: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.days) != len(self.values):
            raise ConfigurationError(
                f"user {self.user_id}: {len(self.days)} active days but {len(self.values)} values"
            )
        if self.days and self.days[0] < 1:
            raise ConfigurationError(f"user {self.user_id}: day indices start at 1")
        if any(a >= b for a, b in zip(self.days, self.days[1:])):
            raise ConfigurationError(f"user {self.user_id}: active days must strictly increase")

    @property
    def first_active_day(self) -> DayIndex | None:
        return self.days[0] if self.days else None

    @property
    def active_count(self) -> int:
        return len(self.days)

    def presence(self, t: DayIndex) -> bool:
        i = bisect_left(self.days, t)
        return i < len(self.days) and self.days[i] == t

    def outcome(self, t: DayIndex) -> float:
        i = bisect_left(self.days, t)
        if i < len(self.days) and self.days[i] == t:
            return self.values[i]
        raise KeyError(f"user {self.user_id} has no outcome on day {t}")

    def slice_indices(self, interval: InclusionInterval) -> tuple[int, int]:
        """Index range into ``days``/``values`` covered by ``interval``."""
        return bisect_left(self.days, interval.start), bisect_right(self.days, interval.end)


def first_active_day(trace: UserTrace) -> DayIndex | None:
    """First day with activity, or None for a user who never appeared."""
    return trace.first_active_day


def inclusion_interval(
    policy: InclusionPolicy, t0: DayIndex, calendar: ExperimentCalendar
) -> InclusionInterval | None:
    """Days analyzed for a user first active on ``t0``, or None if excluded.

    Open admits everyone and spans ``[t0, k]``. Bounded admits only
    ``t0 <= k - d`` and spans exactly d days, ``[t0, t0 + d - 1]``.
    """
    calendar.require_day(t0)
    deadline = policy.admission_deadline(calendar)
    if t0 > deadline:
        return None
    if policy.kind is PolicyKind.BOUNDED:
        return InclusionInterval(t0, t0 + policy.d - 1)
    return InclusionInterval(t0, calendar.k)
