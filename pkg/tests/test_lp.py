import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cohems.appliance import ApplianceSpec, LoadProfile, Residence, check_departure_feasibility, load_injection
from cohems.lp import (
    LpInstance,
    LpStatus,
    PsiOperator,
    assemble_feasible_set,
    build_omega,
    build_upsilon,
    dual_bound,
    relieve_power_ceiling,
    solve_chain,
    solve_linear_plan,
    solve_lp,
    write_lp_file,
)
from oracles import shifted_profile_load, vertex_enumeration

METHODS = ["simplex", "highs"]


@pytest.mark.parametrize("method", METHODS)
def test_single_variable_lower_bound(method):
    sol = solve_lp(LpInstance([1.0], A_ub=[[-1.0]], b_ub=[-1.0]), method)
    assert sol.status is LpStatus.OPTIMAL
    assert sol.x[0] == pytest.approx(1.0) and sol.objective == pytest.approx(1.0)


@pytest.mark.parametrize("method", METHODS)
def test_simplex_edge_optimum(method):
    sol = solve_lp(LpInstance([-1.0, -1.0], A_ub=[[1.0, 1.0]], b_ub=[1.0]), method)
    assert sol.objective == pytest.approx(-1.0)
    assert sol.x.sum() == pytest.approx(1.0) and np.all(sol.x >= -1e-12)


def random_lp(seed):
    """Feasible by construction: ``b`` leaves slack at a random nonnegative point."""
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 6))
    m = int(rng.integers(1, 6))
    A = rng.normal(size=(m, n))
    x0 = rng.uniform(0, 2, n)
    b = A @ x0 + rng.uniform(0, 1, m)
    # a positive row keeps the polytope bounded
    A = np.vstack([A, np.ones(n)])
    b = np.append(b, x0.sum() + rng.uniform(0.5, 3))
    return rng.normal(size=n), A, b


@pytest.mark.parametrize("method", METHODS)
@pytest.mark.parametrize("seed", range(50))
def test_random_lp_matches_vertex_enumeration(seed, method):
    c, A, b = random_lp(seed)
    status, ref = vertex_enumeration(c, A, b)
    sol = solve_lp(LpInstance(c, A_ub=A, b_ub=b), method)
    assert status == "optimal" and sol.status is LpStatus.OPTIMAL
    assert abs(sol.objective - ref) <= 1e-6


@pytest.mark.parametrize("method", METHODS)
def test_infeasible_and_unbounded(method):
    A, b = [[1.0, 1.0], [-1.0, -1.0]], [1.0, -2.0]
    assert vertex_enumeration([1, 1], A, b)[0] == "infeasible"
    assert solve_lp(LpInstance([1.0, 1.0], A_ub=A, b_ub=b), method).status is LpStatus.INFEASIBLE
    A, b = [[1.0, -1.0]], [1.0]
    assert vertex_enumeration([-1, -1], A, b, big=1e4)[0] == "unbounded"
    assert solve_lp(LpInstance([-1.0, -1.0], A_ub=A, b_ub=b), method).status is LpStatus.UNBOUNDED


def test_conflicting_bounds_are_infeasible():
    inst = LpInstance([1.0], lb=[2.0], ub=[1.0])
    assert solve_lp(inst, "simplex").status is LpStatus.INFEASIBLE


def test_equalities_and_free_variables():
    # min x + 2y, x + y = 3, x free with x <= 1, y >= 0
    inst = LpInstance([1.0, 2.0], A_eq=[[1.0, 1.0]], b_eq=[3.0], lb=[-np.inf, 0.0], ub=[1.0, np.inf])
    for method in METHODS:
        sol = solve_lp(inst, method)
        assert sol.objective == pytest.approx(5.0)
        np.testing.assert_allclose(sol.x, [1.0, 2.0], atol=1e-9)


def test_simplex_is_deterministic():
    c, A, b = random_lp(3)
    inst = LpInstance(c, A_ub=A, b_ub=b)
    a, b2 = solve_lp(inst, "simplex"), solve_lp(inst, "simplex")
    assert np.array_equal(a.x, b2.x) and a.iterations == b2.iterations


def test_degenerate_lp_terminates():
    # many redundant rows through the optimal vertex
    A = np.vstack([np.eye(3)] * 8 + [np.ones((1, 3))])
    b = np.concatenate([np.zeros(24), [1.0]])
    sol = solve_lp(LpInstance([-1.0, 0.0, 0.0], A_ub=A, b_ub=b), "simplex")
    assert sol.status is LpStatus.OPTIMAL and sol.objective == pytest.approx(0.0)


@pytest.mark.parametrize("seed", range(10))
def test_objective_scales_with_cost(seed):
    c, A, b = random_lp(seed)
    base = solve_lp(LpInstance(c, A_ub=A, b_ub=b), "simplex").objective
    scaled = solve_lp(LpInstance(7.5 * c, A_ub=A, b_ub=b), "simplex").objective
    assert scaled == pytest.approx(7.5 * base, rel=1e-9, abs=1e-9)


@pytest.mark.parametrize("seed", range(10))
def test_dual_bound_is_weak_and_tight(seed):
    c, A, b = random_lp(seed)
    inst = LpInstance(c, A_ub=A, b_ub=b)
    sol = solve_lp(inst, "highs")
    assert dual_bound(inst, sol.y_ub, sol.y_eq) == pytest.approx(sol.objective, abs=1e-7)
    rng = np.random.default_rng(seed)
    for _ in range(5):
        assert dual_bound(inst, -rng.uniform(0, 2, b.size), []) <= sol.objective + 1e-9


def test_write_lp_file(tmp_path):
    inst = LpInstance([1.0, -2.0], A_ub=[[1.0, 1.0]], b_ub=[4.0], ub=[3.0, np.inf])
    path = tmp_path / "p.lp"
    write_lp_file(inst, path)
    text = path.read_text()
    assert "Minimize" in text and "u0: + 1 x0 + 1 x1 <= 4" in text and "0 <= x0 <= 3" in text


def test_lp_rejects_nonfinite_coefficients():
    with pytest.raises(ValueError):
        LpInstance([np.nan])
    with pytest.raises(ValueError):
        LpInstance([1.0], A_ub=[[1.0, 2.0]], b_ub=[1.0])


# --- operators ---------------------------------------------------------------

def test_omega_examples():
    np.testing.assert_array_equal(build_omega(LoadProfile([2, 2]), 1, 3), [[2, 2, 0], [0, 2, 2], [0, 0, 2]])
    for slot in (1, 3, 6):
        om = build_omega(LoadProfile([5]), slot, 6)
        np.testing.assert_array_equal(om, 5 * np.eye(7 - slot))


def test_upsilon_examples():
    np.testing.assert_array_equal(build_upsilon(1, 1, 2), [[1, -1, 0], [0, 1, -1]])
    up = build_upsilon(3, 2, 7)
    assert np.all(up @ np.full(up.shape[1], 4.0) == 0)


def _residence(g_list, delays, L, pmax=np.inf, base=0.0):
    apps = tuple(ApplianceSpec(LoadProfile(g), z) for g, z in zip(g_list, delays))
    return Residence(apps, np.full(L, base), pmax)


@st.composite
def residence_and_levels(draw):
    L = draw(st.integers(2, 10))
    N = draw(st.integers(1, 3))
    gs = [draw(st.lists(st.floats(0.1, 4.0), min_size=1, max_size=4)) for _ in range(N)]
    levels = np.array([np.cumsum(draw(st.lists(st.integers(0, 2), min_size=L, max_size=L))) for _ in range(N)],
                      dtype=float)
    slot = draw(st.integers(1, L))
    return _residence(gs, [1] * N, L), levels, slot


@given(residence_and_levels())
def test_psi_matches_load_injection(case):
    res, levels, slot = case
    psi = PsiOperator.from_residence(res, slot)
    got = psi.apply(levels[:, slot - 1:].ravel(), levels)
    expected = sum(load_injection(a.profile, levels[i]) for i, a in enumerate(res.appliances))
    np.testing.assert_allclose(got, expected[slot - 1:], atol=1e-12, rtol=0)
    oracle = sum(shifted_profile_load(a.profile.energy_per_slot, levels[i], res.horizon)
                 for i, a in enumerate(res.appliances))
    np.testing.assert_allclose(got, oracle[slot - 1:], atol=1e-12, rtol=0)
    assert np.all(got >= -1e-12)


@given(residence_and_levels())
def test_extended_form_matches_forward_form(case):
    res, levels, slot = case
    psi = PsiOperator.from_residence(res, slot)
    ext = []
    for i, a in enumerate(res.appliances):
        h = min(slot, a.profile.duration)
        full = np.concatenate([[0.0], levels[i]])
        ext.append(full[slot - h:][::-1])
    np.testing.assert_allclose(psi.apply_extended(ext), psi.apply(levels[:, slot - 1:].ravel(), levels),
                               atol=1e-12, rtol=0)


# --- feasible set --------------------------------------------------------------

def test_zero_delay_deterministic_box_collapses():
    L = 5
    res = _residence([[1.0]], [0], L)
    arr = np.array([[0, 1, 1, 2, 2]])
    inc = np.diff(arr, prepend=0).astype(float)
    fs = assemble_feasible_set(res, arr[:, :1], inc, np.zeros((1, L)), 1)
    np.testing.assert_array_equal(fs.lower, fs.upper)
    np.testing.assert_array_equal(fs.upper[0], arr[0])


def test_no_requests_gives_zero_point():
    L = 4
    res = _residence([[1.0, 1.0]], [3], L)
    fs = assemble_feasible_set(res, np.zeros((1, 2)), np.zeros((1, L)), np.zeros((1, L)), 2)
    assert np.all(fs.lower == 0) and np.all(fs.upper == 0)


@pytest.mark.parametrize("slot", [1, 2, 3, 4])
@pytest.mark.parametrize("delay", [0, 1, 2])
def test_feasible_set_agrees_with_hand_enumeration(slot, delay):
    L = 5
    res = _residence([[1.0, 0.5]], [delay], L)
    arr = np.array([0, 1, 1, 2, 2])
    # deterministic future: the rates reproduce the realisation exactly
    rates = np.diff(arr, prepend=0).astype(float)[None, :]
    committed = np.minimum(arr, np.maximum(0, arr - 1))[None, :]
    fs = assemble_feasible_set(res, arr[None, :slot], rates, committed, slot)
    n = L - slot + 1
    for tail in np.ndindex(*([3] * n)):
        d = np.concatenate([committed[0, :slot - 1], tail]).astype(float)
        ok = not check_departure_feasibility(d, arr, delay)
        prefix_ok = not check_departure_feasibility(committed[0, :slot - 1], arr[:slot - 1], delay, slot - 1) \
            if slot > 1 else True
        if prefix_ok:
            assert fs.contains(np.array(tail, dtype=float)) == ok, (tail, fs.violations(np.array(tail)))


# --- exact chain solver ----------------------------------------------------------

@st.composite
def chain_case(draw):
    n = draw(st.integers(1, 8))
    up = np.cumsum(draw(st.lists(st.floats(0, 1.5), min_size=n, max_size=n)))
    start = draw(st.floats(0, 1)) * min(up[0], 1.0)
    lag = draw(st.integers(0, n))
    lo = np.concatenate([np.zeros(lag), up[:n - lag]])
    lo[-1] = up[-1]
    costs = np.array(draw(st.lists(st.floats(-3, 3), min_size=n, max_size=n)))
    return costs, np.maximum(lo, start), np.maximum(up, start), start


def _chain_lp(costs, lo, up, start):
    n = costs.size
    A = np.zeros((n, n))
    b = np.zeros(n)
    b[0] = -start
    A[0, 0] = -1.0
    for k in range(1, n):
        A[k, k - 1], A[k, k] = 1.0, -1.0
    return solve_lp(LpInstance(costs, A_ub=A, b_ub=b, lb=lo, ub=up), "highs")


@settings(max_examples=200)
@given(chain_case())
def test_chain_solver_matches_lp(case):
    costs, lo, up, start = case
    d = solve_chain(costs, lo, up, start)
    ref = _chain_lp(costs, lo, up, start)
    assert ref.status is LpStatus.OPTIMAL
    assert costs @ d == pytest.approx(ref.objective, abs=1e-7)
    assert np.all(d >= lo - 1e-12) and np.all(d <= up + 1e-12) and np.all(np.diff(d) >= -1e-12)
    assert d[0] >= start - 1e-12


def test_chain_zero_cost_launches_earliest():
    up = np.array([1.0, 1.0, 2.5, 3.0])
    d = solve_chain(np.zeros(4), np.array([0.0, 0.0, 0.0, 3.0]), up, 0.0)
    np.testing.assert_array_equal(d, up)


def test_chain_positive_cost_launches_latest():
    lo = np.array([0.0, 0.5, 1.0, 3.0])
    d = solve_chain(np.ones(4), lo, np.array([1.0, 2.0, 3.0, 3.0]), 0.0)
    np.testing.assert_array_equal(d, lo)


def test_linear_plan_respects_power_ceiling():
    L = 4
    res = _residence([[3.0, 3.0], [3.0, 3.0]], [2, 2], L, pmax=4.0)
    arr = np.array([[1, 1, 1, 1], [1, 1, 1, 1]])
    rates = np.zeros((2, L))
    fs = assemble_feasible_set(res, arr[:, :1], rates, np.zeros((2, L)), 1)
    plan = solve_linear_plan(fs, -np.ones(2 * L))
    assert plan.path == "lp"
    assert np.all(fs.pmax_matrix @ plan.levels <= fs.pmax_rhs + 1e-7)
    # the relaxation fills the ceiling exactly at slot 1 (4 / 3 jobs) and finishes both by slot 3
    np.testing.assert_allclose(plan.levels.reshape(2, L).sum(axis=0), [4 / 3, 4 / 3, 2, 2], atol=1e-7)


def test_power_ceiling_relief_restores_feasibility():
    L = 3
    res = _residence([[3.0, 3.0, 3.0], [3.0, 3.0, 3.0]], [0, 0], L, pmax=4.0)
    # both jobs forced at slot 1 cannot fit under the ceiling
    arr = np.ones((2, 1), dtype=int)
    fs = assemble_feasible_set(res, arr, np.zeros((2, L)), np.zeros((2, L)), 1)
    A, b = fs.inequalities()
    lb, ub = fs.bounds()
    assert solve_lp(LpInstance(np.zeros(2 * L), A_ub=A, b_ub=b, lb=lb, ub=ub)).status is LpStatus.INFEASIBLE
    w = relieve_power_ceiling(fs)
    # minimal relief lifts each slot from 4 to the forced 6
    np.testing.assert_allclose(w, [2, 2, 2], atol=1e-6)
    plan = solve_linear_plan(fs, np.zeros(2 * L))
    assert fs.contains(plan.levels)
