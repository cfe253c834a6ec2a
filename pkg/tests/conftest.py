import pytest

from openbounded import ExperimentCalendar, UserTrace, Variant, Weekday

P_GRID = [round(0.05 * i, 2) for i in range(1, 20)]


@pytest.fixture
def monday14():
    return ExperimentCalendar(k=14, start_dow=Weekday.MONDAY)


def make_trace(user_id, variant, day_values):
    """Build a trace from {day: value}; variant may be 'T', 'C', or None."""
    if isinstance(variant, str):
        variant = Variant(variant)
    days = tuple(sorted(day_values))
    return UserTrace(
        user_id=user_id,
        variant=variant,
        days=days,
        values=tuple(float(day_values[d]) for d in days),
    )
