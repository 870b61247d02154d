from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spotsim.characterize import characterize, initial_pod_count, max_rps_per_pod
from spotsim.domain import LoadTestSeries, SLOSpec
from spotsim.errors import InvalidInput, NoSustainableLoad


def series(rows):
    return LoadTestSeries(samples=tuple(rows))


def scan_oracle(rows, fail_thr, drop):
    """Direct re-scan used to freeze expected values."""
    best = None
    run_max = float("-inf")
    for i, (rps, cpu, fail) in enumerate(rows):
        run_max = max(run_max, cpu)
        if fail > fail_thr or cpu < run_max - drop:
            break
        best = i
    return None if best is None else (rows[best][0], best)


# rps 10..100, cpu climbs to 80 then collapses, failures start at rps 70
INFLECTION_ROWS = [
    (10, 10.0, 0.0),
    (20, 20.0, 0.0),
    (30, 30.0, 0.0),
    (40, 45.0, 0.0),
    (50, 60.0, 0.0),
    (60, 80.0, 0.0),
    (70, 75.0, 6.0),
    (80, 65.0, 9.0),
    (90, 62.0, 12.0),
    (100, 60.0, 12.0),
]


class TestMaxRps:
    def test_planted_inflection(self):
        expected = scan_oracle(INFLECTION_ROWS, 2.0, 5.0)
        assert expected == (60, 5)
        assert max_rps_per_pod(series(INFLECTION_ROWS), 2.0, 5.0) == expected

    def test_monotone_cpu_no_failures(self):
        rows = [(r, r * 0.8, 0.0) for r in range(10, 110, 10)]
        rps, idx = max_rps_per_pod(series(rows), 2.0, 5.0)
        assert (rps, idx) == (100, 9)

    def test_first_sample_failing(self):
        rows = [(10, 90.0, 50.0), (20, 80.0, 60.0), (30, 70.0, 70.0)]
        with pytest.raises(NoSustainableLoad):
            max_rps_per_pod(series(rows), 2.0, 5.0)

    def test_cpu_drop_alone_triggers(self):
        rows = [(10, 40.0, 0.0), (20, 60.0, 0.0), (30, 50.0, 0.0), (40, 45.0, 0.0)]
        rps, idx = max_rps_per_pod(series(rows), 2.0, 5.0)
        assert (rps, idx) == (20, 1)

    def test_prefix_rule_ignores_recovery(self):
        # failure spike at rps 30 then recovery: later samples stay unsustainable
        rows = [(10, 30.0, 0.0), (20, 40.0, 0.0), (30, 50.0, 9.0), (40, 60.0, 0.0)]
        rps, _ = max_rps_per_pod(series(rows), 2.0, 5.0)
        assert rps == 20

    def test_bad_thresholds(self):
        with pytest.raises(InvalidInput):
            max_rps_per_pod(series(INFLECTION_ROWS), 0.0, 5.0)


class TestInitialPodCount:
    def test_table_row(self):
        assert initial_pod_count(SLOSpec(50), 62.5) == 1

    def test_four_pods(self):
        assert initial_pod_count(SLOSpec(50), 12.5) == 4

    def test_exact_division_boundary(self):
        assert initial_pod_count(SLOSpec(50), 50) == 1

    def test_never_below_one(self):
        assert initial_pod_count(SLOSpec(1), 1000.0) == 1

    def test_invalid_max_rps(self):
        with pytest.raises(InvalidInput):
            initial_pod_count(SLOSpec(50), 0.0)

    @given(
        slo=st.floats(min_value=1e-3, max_value=1e6, allow_nan=False, allow_infinity=False),
        max_rps=st.floats(min_value=1e-3, max_value=1e6, allow_nan=False, allow_infinity=False),
    )
    @settings(max_examples=300, deadline=None)
    def test_ceil_sufficiency(self, slo, max_rps):
        pods = initial_pod_count(SLOSpec(slo), max_rps)
        assert Fraction(pods) * Fraction(max_rps) >= Fraction(slo)
        # minimality: one pod fewer would not meet the SLO (unless at the floor)
        if pods > 1:
            assert Fraction(pods - 1) * Fraction(max_rps) < Fraction(slo)

    @given(
        slo=st.floats(min_value=0.1, max_value=1e4),
        bump=st.floats(min_value=0.0, max_value=1e4),
        max_rps=st.floats(min_value=0.1, max_value=1e4),
        grow=st.floats(min_value=0.0, max_value=1e4),
    )
    @settings(max_examples=200, deadline=None)
    def test_monotonicity(self, slo, bump, max_rps, grow):
        base = initial_pod_count(SLOSpec(slo), max_rps)
        # non-decreasing in the SLO, non-increasing in per-pod capacity
        assert initial_pod_count(SLOSpec(slo + bump), max_rps) >= base
        assert initial_pod_count(SLOSpec(slo), max_rps + grow) <= base


class TestCharacterize:
    def test_composition(self):
        report = characterize(series(INFLECTION_ROWS), SLOSpec(50))
        assert report.max_rps_per_pod == 60
        assert report.inflection_index == 5
        assert report.initial_pods == 1
        assert report.failure_threshold_used == 2.0

    def test_slo_150(self):
        assert characterize(series(INFLECTION_ROWS), SLOSpec(150)).initial_pods == 3

    def test_slo_60(self):
        assert characterize(series(INFLECTION_ROWS), SLOSpec(60)).initial_pods == 1

    def test_never_past_failure_onset(self):
        rps, _ = max_rps_per_pod(series(INFLECTION_ROWS), 2.0, 5.0)
        first_fail = next(r for r, _, f in INFLECTION_ROWS if f > 2.0)
        assert rps < first_fail
