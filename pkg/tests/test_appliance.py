import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cohems.appliance import (
    ArrivalProcess,
    LoadProfile,
    check_departure_feasibility,
    departures_from_launches,
    extract_schedule,
    launched_energy,
    load_injection,
    sample_arrivals,
    unscheduled_injection,
)
from oracles import shifted_profile_load


def test_profile_validation():
    with pytest.raises(ValueError):
        LoadProfile([])
    with pytest.raises(ValueError):
        LoadProfile([0.0, 1.0])
    with pytest.raises(ValueError):
        LoadProfile([1.0, -0.1])
    p = LoadProfile.rectangular(2.5, 4)
    assert p.duration == 4 and p.total_energy == 10.0


def test_arrivals_must_be_binary_increments():
    with pytest.raises(ValueError):
        ArrivalProcess([0, 2, 2], [0, 0.5, 0])
    with pytest.raises(ValueError):
        ArrivalProcess([0, 1, 1], [0, 1.5, 0])


@pytest.mark.parametrize("g, d, expected", [
    ([2, 2], [0, 1, 1, 1], [0, 2, 2, 0]),
    ([1, 1, 1], [1, 2, 2], [1, 2, 2]),
])
def test_load_injection_examples(g, d, expected):
    assert np.array_equal(load_injection(LoadProfile(g), d), expected)


def test_load_injection_without_departures():
    assert np.all(load_injection(LoadProfile([3.0, 1.0, 2.0]), np.zeros(6)) == 0)


def test_oracle_matches_frozen_example():
    # the brute-force oracle itself must reproduce the hand-computed values
    assert np.array_equal(shifted_profile_load([1, 1, 1], [1, 2, 2], 3), [1, 2, 2])
    assert np.array_equal(shifted_profile_load([2, 2], [0, 1, 1, 1], 4), [0, 2, 2, 0])


def test_unscheduled_injection_examples():
    assert np.array_equal(unscheduled_injection(LoadProfile([2, 2]), [0, 1, 1, 1]), [0, 2, 2, 0])
    assert np.all(unscheduled_injection(LoadProfile([2, 2]), [0, 0, 0]) == 0)
    assert np.array_equal(unscheduled_injection(LoadProfile([1, 1, 1]), [1, 2, 2]), [1, 2, 2])


@pytest.mark.parametrize("d, expected", [
    ([0, 1, 1, 2], (2, 4)),
    ([2, 2], (1, 1)),
    ([0, 0, 3], (3, 3, 3)),
])
def test_extract_schedule(d, expected):
    assert extract_schedule(d) == expected
    # counting the increments gives the same multiset of launch slots
    inc = np.diff(d, prepend=0)
    assert tuple(np.repeat(np.arange(1, len(d) + 1), inc)) == expected


def test_extract_schedule_rejects_fractional():
    with pytest.raises(ValueError):
        extract_schedule([0, 0.5, 1])


def test_sample_arrivals():
    rng = np.random.default_rng(0)
    assert np.array_equal(sample_arrivals([0, 0, 1, 0], rng).counts, [0, 0, 1, 1])
    assert np.all(sample_arrivals(np.zeros(5), rng).counts == 0)
    with pytest.raises(ValueError):
        sample_arrivals([0.5, 1.2], rng)


def test_sample_arrivals_monte_carlo_mean():
    rng = np.random.default_rng(12345)
    finals = [sample_arrivals(np.full(4, 0.5), rng).counts[-1] for _ in range(100_000)]
    assert abs(np.mean(finals) - 2.0) <= 0.02


def test_sample_arrivals_reproducible():
    a = sample_arrivals(np.full(10, 0.3), np.random.default_rng(7)).counts
    b = sample_arrivals(np.full(10, 0.3), np.random.default_rng(7)).counts
    assert np.array_equal(a, b)


def test_feasibility_examples():
    assert check_departure_feasibility([0, 1, 1, 2], [0, 1, 1, 2], 0) == []
    bad = check_departure_feasibility([0, 1], [1, 1], 0)
    assert [v.slot for v in bad] == [1] and bad[0].constraint == "deadline"
    assert check_departure_feasibility([0, 0, 0, 1], [0, 1, 1, 1], 2) == []


def test_feasibility_reports_each_kind():
    kinds = {v.constraint for v in check_departure_feasibility([1, 0, 2], [0, 1, 1], 1)}
    assert {"launch after request", "nondecreasing", "terminal"} <= kinds
    assert any(v.constraint == "nonnegative" for v in check_departure_feasibility([-1, 0], [0, 0], 1))


def _nondecreasing(draw, L, top=3):
    inc = draw(st.lists(st.integers(0, top), min_size=L, max_size=L))
    return np.cumsum(inc)


@st.composite
def profile_and_levels(draw):
    G = draw(st.integers(1, 6))
    g = [draw(st.floats(0.1, 5.0))] + draw(st.lists(st.floats(0.0, 5.0), min_size=G - 1, max_size=G - 1))
    L = draw(st.integers(1, 12))
    return np.array(g), _nondecreasing(draw, L), L


@given(profile_and_levels())
def test_load_injection_nonnegative_and_matches_oracle(case):
    g, d, L = case
    S = load_injection(LoadProfile(g), d)
    assert np.all(S >= 0)
    np.testing.assert_allclose(S, shifted_profile_load(g, d, L), atol=1e-12, rtol=0)


@given(profile_and_levels())
def test_energy_conservation_when_jobs_complete(case):
    g, d, L = case
    G = g.size
    # pad the horizon so every launch completes
    padded = np.concatenate([d, np.full(G, d[-1])])
    S = load_injection(LoadProfile(g), padded)
    assert S.sum() == pytest.approx(d[-1] * g.sum(), rel=1e-12, abs=1e-12)
    assert launched_energy(LoadProfile(g), padded) == pytest.approx(d[-1] * g.sum(), rel=1e-12, abs=1e-12)


@given(st.lists(st.integers(1, 15), max_size=8))
def test_schedule_roundtrip(launches):
    launches = sorted(launches)
    assert extract_schedule(departures_from_launches(launches, 15)) == tuple(launches)


@given(st.lists(st.integers(0, 1), min_size=1, max_size=8))
def test_unscheduled_equals_immediate_launch(inc):
    a = np.cumsum(inc)
    g = LoadProfile([1.5, 0.5, 2.0])
    assert np.array_equal(unscheduled_injection(g, a), load_injection(g, a))


@settings(max_examples=50)
@given(st.lists(st.integers(0, 1), min_size=1, max_size=5))
def test_zero_delay_admits_only_immediate_launch(inc):
    a = np.cumsum(inc)
    L = a.size
    feasible = []
    # enumerate every nondecreasing integer process bounded by a(L)
    for incs in np.ndindex(*([int(a[-1]) + 1] * L)):
        d = np.cumsum(incs)
        if d[-1] <= a[-1] and not check_departure_feasibility(d, a, 0):
            feasible.append(tuple(d))
    assert feasible == [tuple(a)]
