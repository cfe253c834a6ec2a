import pytest
from hypothesis import given
from hypothesis import strategies as st

from openbounded import (
    OPEN,
    ConfigurationError,
    ExperimentCalendar,
    InclusionPolicy,
    PolicyKind,
    UserTrace,
    Weekday,
    bounded,
    first_active_day,
    inclusion_interval,
    is_weekend,
)
from conftest import make_trace


class TestCalendar:
    def test_monday_start_weekends(self, monday14):
        assert [t for t in monday14.days() if monday14.is_weekend(t)] == [6, 7, 13, 14]

    def test_day6_monday_start_is_saturday(self, monday14):
        assert is_weekend(6, monday14)
        assert monday14.weekday_of(6) is Weekday.SATURDAY

    def test_day8_monday_start_is_weekday(self, monday14):
        assert not is_weekend(8, monday14)

    def test_saturday_start_day1_is_weekend(self):
        cal = ExperimentCalendar(k=7, start_dow=Weekday.SATURDAY)
        assert is_weekend(1, cal)

    @given(st.sampled_from(list(Weekday)))
    def test_any_week_has_two_weekend_days(self, start):
        cal = ExperimentCalendar(k=7, start_dow=start)
        assert len(cal.weekend_days()) == 2

    @given(st.sampled_from(list(Weekday)), st.integers(min_value=1, max_value=8))
    def test_weekend_count_scales_with_weeks(self, start, weeks):
        cal = ExperimentCalendar(k=7 * weeks, start_dow=start)
        assert len(cal.weekend_days()) == 2 * weeks

    def test_length_must_be_positive(self):
        with pytest.raises(ConfigurationError):
            ExperimentCalendar(k=0)

    def test_day_bounds_checked(self, monday14):
        with pytest.raises(ConfigurationError):
            monday14.is_weekend(15)
        with pytest.raises(ConfigurationError):
            monday14.is_weekend(0)


class TestFirstActiveDay:
    def test_min_active_day(self):
        trace = make_trace("u1", None, {3: 1.0, 5: 1.0})
        assert first_active_day(trace) == 3

    def test_no_activity(self):
        trace = UserTrace("u1", None, (), ())
        assert first_active_day(trace) is None

    def test_always_active(self):
        trace = make_trace("u1", None, {d: 1.0 for d in range(1, 15)})
        assert first_active_day(trace) == 1


class TestInclusionInterval:
    def test_open_spans_to_end(self, monday14):
        assert inclusion_interval(OPEN, 3, monday14).days() == range(3, 15)

    def test_bounded_spans_exactly_d_days(self, monday14):
        interval = inclusion_interval(bounded(7), 3, monday14)
        assert (interval.start, interval.end) == (3, 9)
        assert len(interval.days()) == 7

    def test_bounded_excludes_past_deadline(self, monday14):
        assert inclusion_interval(bounded(7), 8, monday14) is None
        assert inclusion_interval(bounded(7), 7, monday14) is not None

    def test_bounded_window_longer_than_experiment(self, monday14):
        with pytest.raises(ConfigurationError):
            inclusion_interval(bounded(15), 1, monday14)

    def test_open_admits_last_day(self, monday14):
        interval = inclusion_interval(OPEN, 14, monday14)
        assert (interval.start, interval.end) == (14, 14)

    @given(
        st.integers(min_value=1, max_value=14),
        st.integers(min_value=1, max_value=14),
    )
    def test_bounded_admission_subset_of_open(self, t0, d):
        cal = ExperimentCalendar(k=14)
        open_iv = inclusion_interval(OPEN, t0, cal)
        bounded_iv = inclusion_interval(bounded(d), t0, cal)
        assert open_iv is not None
        if bounded_iv is not None:
            assert bounded_iv.contains(t0)
            assert len(bounded_iv.days()) == d
            assert bounded_iv.end <= cal.k
            assert open_iv.contains(bounded_iv.start)

    def test_policy_validation(self):
        with pytest.raises(ConfigurationError):
            InclusionPolicy(PolicyKind.BOUNDED)
        with pytest.raises(ConfigurationError):
            InclusionPolicy(PolicyKind.OPEN, d=7)
        with pytest.raises(ConfigurationError):
            bounded(0)

    def test_admission_deadline(self, monday14):
        assert bounded(7).admission_deadline(monday14) == 7
        assert OPEN.admission_deadline(monday14) == 14


class TestUserTrace:
    def test_length_mismatch_rejected(self):
        with pytest.raises(ConfigurationError):
            UserTrace("u", None, (1, 2), (1.0,))

    def test_days_must_increase(self):
        with pytest.raises(ConfigurationError):
            UserTrace("u", None, (2, 2), (1.0, 1.0))
        with pytest.raises(ConfigurationError):
            UserTrace("u", None, (3, 1), (1.0, 1.0))

    def test_days_start_at_one(self):
        with pytest.raises(ConfigurationError):
            UserTrace("u", None, (0, 1), (1.0, 1.0))

    def test_presence_and_outcome(self):
        trace = make_trace("u", "T", {2: 5.0, 9: 7.0})
        assert trace.presence(2) and not trace.presence(3)
        assert trace.outcome(9) == 7.0
        with pytest.raises(KeyError):
            trace.outcome(3)
