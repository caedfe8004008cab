"""bargaining: frontier family, solution roots, transition terms, and the
stochastically stable division of the demand game."""

import math

import numpy as np
import pytest

from ldl import (
    ConditionError,
    Frontier,
    convergence_sweep,
    crossings,
    rl_functions,
    solve_solutions,
    stable_division,
)

PANEL_A = Frontier(1, 3, 0.5)   # f(x) = sqrt(1 - x/3) on [0, 3]
PANEL_B = Frontier(3, 1, 0.5)   # f(x) = sqrt(3 (1 - x)) on [0, 1]


def seeded_frontiers(count, seed):
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        fr = Frontier(
            float(rng.uniform(0.5, 3.0)),
            float(rng.uniform(1.0, 4.0)),
            float(rng.uniform(0.3, 0.7)),
        )
        sol = solve_solutions(fr)
        # keep clear of the knife-edge fixed point so orderings are strict
        if abs(sol.s_nash - sol.s_egalitarian) > 0.05:
            out.append(fr)
    return out


# ---------------------------------------------------------------------------
# Frontier family


def test_frontier_validation():
    with pytest.raises(ConditionError):
        Frontier(1, 3, 1.0)
    with pytest.raises(ConditionError):
        Frontier(-1, 3, 0.5)


def test_frontier_values_panel_a():
    assert PANEL_A(1.0) == pytest.approx(math.sqrt(2 / 3))
    assert PANEL_A(2.0) == pytest.approx(math.sqrt(1 / 3))
    assert PANEL_A.s_bar == 3


def test_frontier_shape_monotonicities():
    # f'/f, x f' - f, f' + f/x, f' + (f/x)^2 all strictly decreasing
    for fr in (PANEL_A, PANEL_B):
        xs = np.linspace(fr.s_bar * 1e-3, fr.s_bar * 0.999, 1000)
        f = fr.value(xs)
        d = fr.derivative(xs)
        for series in (d / f, xs * d - f, d + f / xs, d + (f / xs) ** 2):
            assert np.all(np.diff(series) < 0)


# ---------------------------------------------------------------------------
# Solution roots


def test_solutions_panel_a():
    sol = solve_solutions(PANEL_A)
    assert sol.s_nash == pytest.approx(2.0, abs=1e-9)
    assert sol.s_egalitarian == pytest.approx((-1 + math.sqrt(37)) / 6, abs=1e-9)
    assert sol.s_intentional == pytest.approx(1.47479, abs=1e-4)
    assert sol.ordering == "nash_above"


def test_solutions_panel_b():
    sol = solve_solutions(PANEL_B)
    assert sol.s_nash == pytest.approx(2 / 3, abs=1e-9)
    assert sol.s_egalitarian == pytest.approx((-3 + math.sqrt(21)) / 2, abs=1e-9)
    assert sol.ordering == "egalitarian_above"
    assert sol.s_nash < sol.s_intentional < sol.s_egalitarian


def test_solution_residuals():
    for fr in (PANEL_A, PANEL_B):
        sol = solve_solutions(fr)
        assert abs(fr(sol.s_nash) / sol.s_nash + fr.derivative(sol.s_nash)) <= 1e-10
        assert abs(
            (fr(sol.s_intentional) / sol.s_intentional) ** 2
            + fr.derivative(sol.s_intentional)
        ) <= 1e-10
        assert abs(fr(sol.s_egalitarian) - sol.s_egalitarian) <= 1e-10


def test_intentional_solution_between_the_other_two():
    for fr in seeded_frontiers(10, seed=99):
        sol = solve_solutions(fr)
        lo, hi = sorted((sol.s_nash, sol.s_egalitarian))
        assert lo < sol.s_intentional < hi


# ---------------------------------------------------------------------------
# Transition terms


def test_rl_functions_direct_evaluation():
    f = PANEL_A
    delta, m = 0.5, 2
    r1, r2, l1, l2 = rl_functions(f, delta, m)
    assert r1 == pytest.approx((f(1.0) - f(1.5)) * 1.0 / 1.5, abs=1e-14)
    assert r2 == pytest.approx(1.0 * (f(1.0) - f(1.5)) / f(1.0), abs=1e-14)
    assert l1 == pytest.approx(f(1.0) * 0.5 / 1.0, abs=1e-14)
    assert l2 == pytest.approx(0.5 * f(1.0) / f(0.5), abs=1e-14)


def test_rl_monotonicity_full_sweep():
    delta = 0.05
    L = round(PANEL_A.s_bar / delta)
    vals = [rl_functions(PANEL_A, delta, m) for m in range(1, L - 1)]
    r1s, r2s, l1s, l2s = zip(*vals)
    assert all(b > a for a, b in zip(r1s, r1s[1:]))
    assert all(b > a for a, b in zip(r2s, r2s[1:]))
    assert all(b < a for a, b in zip(l1s, l1s[1:]))
    assert all(b < a for a, b in zip(l2s, l2s[1:]))


def test_rl_out_of_range():
    with pytest.raises(ConditionError):
        rl_functions(PANEL_A, 0.5, 5)  # no right neighbor at the top demand


def test_crossings_exist_and_converge():
    # delta mu*(delta) -> s_nash and delta mu^I(delta) -> s_intentional
    sol = solve_solutions(PANEL_A)
    gaps_star, gaps_int = [], []
    for delta in (0.1, 0.05, 0.01):
        cp = crossings(PANEL_A, delta)
        assert cp.mu_star is not None and cp.mu_intentional is not None
        gaps_star.append(abs(delta * cp.mu_star - sol.s_nash))
        gaps_int.append(abs(delta * cp.mu_intentional - sol.s_intentional))
    assert gaps_star[-1] <= 0.05 and gaps_int[-1] <= 0.05
    assert gaps_star[-1] <= gaps_star[0] + 1e-9
    assert gaps_int[-1] <= gaps_int[0] + 1e-9


def test_small_delta_expansion_of_terms():
    # r2 ~ -delta x f'/f and l1 = delta f/x: their ratio tends to -f' x^2/f^2
    delta = 1e-3
    x = 1.2
    m = x / delta
    r1, r2, l1, l2 = rl_functions(PANEL_A, delta, m)
    f, fp = PANEL_A(x), PANEL_A.derivative(x)
    assert r2 / delta == pytest.approx(-x * fp / f, rel=1e-3)
    assert l1 / delta == pytest.approx(f / x, rel=1e-9)
    assert r2 / l1 == pytest.approx(-fp * x**2 / f**2, rel=1e-3)


# ---------------------------------------------------------------------------
# Stable divisions


def test_stable_division_panel_a_unintentional():
    sol = solve_solutions(PANEL_A)
    res = stable_division(PANEL_A, 0.01, "unintentional")
    assert abs(res.x_star - sol.s_nash) <= 0.05
    assert res.crossing_agrees


def test_stable_division_panel_a_intentional():
    sol = solve_solutions(PANEL_A)
    res = stable_division(PANEL_A, 0.01, "intentional")
    assert abs(res.x_star - sol.s_intentional) <= 0.05


def test_stable_division_panel_b_binding_pair_reversed_case():
    # egalitarian-above frontier: the unintentional optimum pairs r2 with l2
    res = stable_division(PANEL_B, 0.01, "unintentional")
    per_m = res.per_m_binding
    m = res.m_star
    assert res.binding_term in ("r2", "l2")
    near = set(per_m[max(0, m - 3):m + 2])
    assert near <= {"r2", "l2"}


def test_binding_terms_split_around_the_optimum():
    # below the optimum the binding transition points right, above it left
    for fr, rule in ((PANEL_A, "unintentional"), (PANEL_A, "intentional"),
                     (PANEL_B, "unintentional")):
        res = stable_division(fr, 0.02, rule)
        for m, term in enumerate(res.per_m_binding, start=1):
            if m < res.m_star:
                assert term in ("r1", "r2"), (rule, m)
            elif m > res.m_star:
                assert term in ("l1", "l2"), (rule, m)


def test_intentional_transitions_driven_by_beneficiary():
    res = stable_division(PANEL_A, 0.01, "intentional")
    for m, term in enumerate(res.per_m_binding, start=1):
        if term.startswith("r"):
            assert term == "r2"  # rightward: first population deviates
        else:
            assert term == "l1"  # leftward: second population deviates


def test_discrete_orderings_match_case_split():
    for fr in (PANEL_A, PANEL_B):
        sol = solve_solutions(fr)
        delta = 0.01
        m_un = stable_division(fr, delta, "unintentional").x_star
        m_int = stable_division(fr, delta, "intentional").x_star
        m_egal = delta * round(sol.s_egalitarian / delta)
        if sol.s_nash > sol.s_egalitarian:
            assert m_un > m_int > m_egal
        else:
            assert m_un < m_int < m_egal


def test_seeded_frontier_orderings_at_discrete_resolution():
    for fr in seeded_frontiers(10, seed=424):
        sol = solve_solutions(fr)
        delta = fr.s_bar / 300
        m_un = stable_division(fr, delta, "unintentional").x_star
        m_int = stable_division(fr, delta, "intentional").x_star
        if sol.s_nash > sol.s_egalitarian:
            assert sol.s_nash > sol.s_intentional > sol.s_egalitarian
            assert m_un > m_int
        else:
            assert sol.s_nash < sol.s_intentional < sol.s_egalitarian
            assert m_un < m_int


def test_sweep_errors_shrink():
    rows = convergence_sweep(PANEL_A, (0.1, 0.05, 0.01), "unintentional")
    assert rows[-1].error <= 0.05
    assert rows[-1].error <= rows[0].error + rows[0].delta
    assert [r.target for r in rows] == [rows[0].target] * 3


def test_sweep_intentional_between_divisions():
    for fr in (PANEL_A, PANEL_B):
        sol = solve_solutions(fr)
        for delta in (0.1, 0.05, 0.01):
            d = delta * fr.s_bar / 3  # scale to the frontier's span
            L = round(fr.s_bar / d)
            d = fr.s_bar / L
            un = stable_division(fr, d, "unintentional").x_star
            it = stable_division(fr, d, "intentional").x_star
            lo, hi = sorted((un, delta * 0 + sol.s_egalitarian))
            assert lo - d <= it <= hi + d


def test_sweep_coarsest_grid_warns():
    res = stable_division(PANEL_A, 1.0, "unintentional")
    assert any("coarsest" in w for w in res.warnings)


def test_stable_division_requires_divisible_grid():
    with pytest.raises(ConditionError):
        stable_division(PANEL_A, 0.07, "unintentional")
