import pytest
from hypothesis import given
from hypothesis import strategies as st

from rtface.errors import InvalidInputError
from rtface.scheduler import AGE, EXPRESSION, GENDER, TASKS, CadencePolicy, expected_cost, tasks_for

LAT200 = {t: 200.0 for t in TASKS}


def simulated_cost(policy, latency, cycles):
    """Oracle: run a per-task countdown for ``cycles`` cycles and average the spend."""
    countdown = {t: 0 for t in TASKS}
    total = 0.0
    for _ in range(cycles):
        for t in TASKS:
            if countdown[t] == 0:
                total += latency[t]
                countdown[t] = policy.every(t)
            countdown[t] -= 1
    return total / cycles


def test_tasks_for_defaults():
    p = CadencePolicy()
    assert tasks_for(p, 0) == {AGE, GENDER, EXPRESSION}
    assert tasks_for(p, 1) == {EXPRESSION}
    assert tasks_for(p, 4) == {AGE, GENDER, EXPRESSION}


def test_negative_cycle():
    with pytest.raises(InvalidInputError):
        tasks_for(CadencePolicy(), -1)


def test_policy_validation():
    with pytest.raises(InvalidInputError):
        CadencePolicy(age_every=0)


def test_expected_cost_every_cycle_is_600():
    assert expected_cost(CadencePolicy.every_cycle(), LAT200) == 600.0
    assert simulated_cost(CadencePolicy.every_cycle(), LAT200, 10_000) == 600.0


def test_expected_cost_cadence_4_is_300():
    assert expected_cost(CadencePolicy(), LAT200) == 300.0
    assert simulated_cost(CadencePolicy(), LAT200, 10_000) == pytest.approx(300.0, abs=1e-9)


def test_cadence_4_is_the_integer_cadence_giving_300():
    hits = [n for n in range(1, 50) if expected_cost(CadencePolicy(1, n, n), LAT200) == 300.0]
    assert hits == [4]


def test_expected_cost_cadence_100():
    p = CadencePolicy(1, 100, 100)
    assert expected_cost(p, LAT200) == pytest.approx(204.0)
    assert simulated_cost(p, LAT200, 10_000) == pytest.approx(204.0, abs=1e-9)


def test_negative_latency_rejected():
    with pytest.raises(InvalidInputError):
        expected_cost(CadencePolicy(), {AGE: -1})


cadences = st.builds(CadencePolicy, st.integers(1, 6), st.integers(1, 6), st.integers(1, 6))


@given(cadences, st.integers(0, 200))
def test_periodic(policy, k):
    assert tasks_for(policy, k) == tasks_for(policy, k + policy.period)


@given(cadences, st.integers(1, 5))
def test_simulation_exact_over_whole_periods(policy, n_periods):
    m = policy.period * n_periods
    lat = {AGE: 170.0, GENDER: 90.0, EXPRESSION: 200.0}
    mean = sum(sum(lat[t] for t in tasks_for(policy, k)) for k in range(m)) / m
    assert mean == pytest.approx(expected_cost(policy, lat), rel=1e-12)


@given(cadences, st.integers(1, 300))
def test_simulation_converges_within_bound(policy, m):
    lat = {AGE: 200.0, GENDER: 200.0, EXPRESSION: 200.0}
    mean = sum(sum(lat[t] for t in tasks_for(policy, k)) for k in range(m)) / m
    assert abs(mean - expected_cost(policy, lat)) <= sum(lat.values()) / m + 1e-9


def test_default_prioritises_expression():
    p = CadencePolicy()
    counts = {t: sum(t in tasks_for(p, k) for k in range(100)) for t in TASKS}
    assert counts[EXPRESSION] >= counts[AGE] and counts[EXPRESSION] >= counts[GENDER]
