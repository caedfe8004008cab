"""stability: radius/incidence machinery, exact transition costs, rooted
trees, and stationary distributions."""

import math

import numpy as np
import pytest

from ldl import (
    CostRule,
    Frontier,
    GuardrailExceeded,
    Move,
    OnePopGame,
    apply_move,
    arborescence_root,
    beta_ladder_trace,
    exit_bruteforce,
    incidence,
    invariant_measure,
    maxmin_test,
    ndg_build,
    radius_matrix,
    resolve_stability,
    transition_cost_bruteforce,
    transition_cost_matrix,
)
from ldl.chain import convention_state, path_cost
from ldl.stability import cycles, _tree_cost_edmonds, _tree_cost_exhaustive
from gamegen import ROUTED, TECH, TECH_UNEVEN, TWO_STRATEGY, random_condition_a_games

NDG = ndg_build(Frontier(1, 3, 0.5), 12)  # delta = 0.25, demands 1..11


def test_radius_two_strategy_values():
    rm = radius_matrix(TWO_STRATEGY)
    assert rm.values[0, 1] == pytest.approx(2 / 3)
    assert rm.values[1, 0] == pytest.approx(1 / 6)
    assert math.isnan(rm.values[0, 0])


def test_radius_tech_cyclic_symmetry():
    rm = radius_matrix(TECH)
    assert rm.values[0, 1] == pytest.approx(3.515625)
    assert rm.values[0, 2] == pytest.approx(4.515625)
    # equal benefits make the matrix cyclically symmetric
    for (i, j), (a, b) in (((0, 1), (1, 2)), ((1, 2), (2, 0)), ((0, 2), (1, 0))):
        assert rm.values[i, j] == pytest.approx(rm.values[a, b])


def test_radius_symmetric_game_all_equal():
    g = OnePopGame([[5, 1, 1], [1, 5, 1], [1, 1, 5]])
    vals = radius_matrix(g).values
    off = vals[~np.isnan(vals)]
    assert np.allclose(off, off[0])


def test_incidence_and_unique_cycle_two_strategies():
    rm = radius_matrix(TWO_STRATEGY)
    inc = incidence(rm.values)
    assert inc.tolist() == [[0, 1], [1, 0]]
    assert cycles(inc) == [(0, 1)]


def test_incidence_reports_ties():
    vals = np.array([[np.nan, 1.0, 1.0], [0.5, np.nan, 2.0], [2.0, 0.5, np.nan]])
    inc = incidence(vals)
    assert inc[0].tolist() == [0, 1, 1]
    assert len(cycles(inc)) >= 2


def test_maxmin_two_strategy_risk_dominant():
    rep = maxmin_test(TWO_STRATEGY)
    assert rep.stable == 0
    assert rep.local_resistance
    assert rep.candidates == (0,)


def test_maxmin_symmetric_ties_inconclusive():
    g = OnePopGame([[5, 1, 1], [1, 5, 1], [1, 1, 5]])
    rep = maxmin_test(g)
    assert rep.candidates == (0, 1, 2)
    assert rep.stable is None


def test_maxmin_uneven_tech_conclusive():
    rep = maxmin_test(TECH_UNEVEN)
    assert rep.stable == 2
    assert rep.local_resistance
    assert rep.radii[2] == pytest.approx(0.5 * 23**2 / 40)


def test_ndg_incidence_steps_to_adjacent_conventions():
    panel_b = ndg_build(Frontier(3, 1, 0.5), 10)
    for game in (NDG, panel_b):
        for rule in (CostRule.LOGIT, CostRule.INTENTIONAL):
            vals = radius_matrix(game, rule).values
            inc = incidence(vals)
            for m in range(game.k):
                targets = [j for j in range(game.k) if inc[m, j]]
                assert all(abs(j - m) == 1 for j in targets)


def test_ndg_maxmin_agrees_with_demand_argmax():
    from ldl import stable_division

    div = stable_division(Frontier(1, 3, 0.5), 0.25, "intentional")
    rep = maxmin_test(NDG, CostRule.INTENTIONAL)
    assert rep.stable is not None
    assert rep.stable + 1 == div.m_star  # demand index is 1-based


# ---------------------------------------------------------------------------
# Exact transition costs


def test_transition_cost_k2_equals_exit_cost():
    a = transition_cost_bruteforce(TWO_STRATEGY, 12, 0, 1)
    b = exit_bruteforce(TWO_STRATEGY, 12, 0)
    assert a.cost == pytest.approx(b.cost, abs=1e-12)


def test_transition_cost_dominates_exit_cost():
    n = 30
    exit_cost = exit_bruteforce(TECH, n, 0).cost
    for j in (1, 2):
        c = transition_cost_bruteforce(TECH, n, 0, j)
        assert c.cost >= exit_cost - 1e-12


def test_transition_cost_tech_n60_frozen_values():
    assert transition_cost_bruteforce(TECH, 60, 0, 1).normalized == pytest.approx(
        3.641111111111, abs=1e-9
    )
    assert transition_cost_bruteforce(TECH, 60, 0, 2).normalized == pytest.approx(
        4.657777777778, abs=1e-9
    )


def test_transition_cost_converges_to_radius_minimum():
    rm = radius_matrix(TECH)
    lo_limit = min(rm.values[0, 1], rm.values[0, 2])
    lo_60 = min(
        transition_cost_bruteforce(TECH, 60, 0, j).normalized for j in (1, 2)
    )
    assert lo_60 == pytest.approx(lo_limit, rel=0.05)


def test_transition_cost_upper_bounds():
    # always below the straight-line witness; within 5/n for small payoffs
    for g in (TWO_STRATEGY, ROUTED):
        rm = radius_matrix(g).values
        for n in (30, 60):
            for i in range(g.k):
                for j in range(g.k):
                    if i == j:
                        continue
                    c = transition_cost_bruteforce(g, n, i, j).normalized
                    witness = _straight_witness_cost(g, n, i, j)
                    assert c <= witness / n + 1e-12
                    assert c <= rm[i, j] + 5 / n


def _straight_witness_cost(game, n, i, j):
    from ldl import in_basin

    state = convention_state(game, n, i)
    states = [state]
    while not in_basin(game, states[-1], j):
        states.append(apply_move(states[-1], Move(i, j)))
    return path_cost(game, CostRule.LOGIT, states)


def test_incidence_agreement_radius_vs_oracle():
    # rows whose argmin margin is well separated agree between R and C^(n)
    n = 60
    for g in (TECH, TECH_UNEVEN, ROUTED):
        rm = radius_matrix(g).values
        cm = transition_cost_matrix(g, n)
        inc_r = incidence(rm)
        inc_c = incidence(cm, tol=1e-9)
        for i in range(g.k):
            row = sorted(rm[i, j] for j in range(g.k) if j != i)
            margin = row[1] - row[0]
            err = max(
                abs(cm[i, j] - rm[i, j]) for j in range(g.k) if j != i
            )
            if margin > 2 * err:
                assert inc_r[i].tolist() == inc_c[i].tolist()


# ---------------------------------------------------------------------------
# Rooted trees


def test_arborescence_two_strategies_picks_cheaper_inflow():
    vals = radius_matrix(TWO_STRATEGY).values
    res = arborescence_root(vals)
    assert res.roots == (0,)  # tree toward 0 costs C[1,0] = 1/6


def test_arborescence_all_ties():
    vals = np.full((3, 3), 2.0)
    np.fill_diagonal(vals, np.nan)
    assert arborescence_root(vals).roots == (0, 1, 2)


def test_arborescence_methods_agree_on_random_matrices():
    rng = np.random.default_rng(7)
    for k in (3, 4, 5):
        for _ in range(20):
            vals = rng.uniform(0.1, 5.0, size=(k, k))
            np.fill_diagonal(vals, np.nan)
            for r in range(k):
                assert _tree_cost_edmonds(vals, r) == pytest.approx(
                    _tree_cost_exhaustive(vals, r), abs=1e-9
                )


def test_arborescence_exhaustive_cap():
    vals = np.ones((10, 10))
    with pytest.raises(GuardrailExceeded):
        arborescence_root(vals, method="exhaustive")


def test_maxmin_conclusive_matches_tree_root_seeded_sweep():
    games = random_condition_a_games(50, seed=2025)
    conclusive = 0
    for g in games:
        rep = maxmin_test(g)
        if rep.stable is None:
            continue
        conclusive += 1
        roots = arborescence_root(radius_matrix(g).values).roots
        assert rep.stable in roots
    assert conclusive >= 20


# ---------------------------------------------------------------------------
# Stationary distributions


def _birth_death_stationary(game, n, beta):
    """Closed-form stationary law for two-strategy chains (detailed balance)."""
    from ldl.chain import transition_matrix

    states, P = transition_matrix(game, n, beta)
    idx = {s: i for i, s in enumerate(states)}
    pi = np.ones(len(states))
    order = sorted(states, key=lambda s: s[0])
    for a, b in zip(order, order[1:]):
        pi[idx[b]] = pi[idx[a]] * P[idx[a], idx[b]] / P[idx[b], idx[a]]
    return states, pi / pi.sum()


def test_invariant_measure_matches_birth_death_oracle():
    for beta in (0.5, 1.0, 4.0, 16.0):
        states, got = invariant_measure(TWO_STRATEGY, 8, beta)
        oracle_states, want = _birth_death_stationary(TWO_STRATEGY, 8, beta)
        assert states == oracle_states
        assert np.abs(got - want).max() <= 1e-12


def test_invariant_measure_reports_lost_conditioning():
    from ldl.errors import LdlError

    with pytest.raises(LdlError):
        invariant_measure(TECH_UNEVEN, 10, 64.0)
    # the ladder stops at the last numerically sound rung instead of raising
    trace = beta_ladder_trace(TECH_UNEVEN, 10, 2, beta0=32.0, mass_target=2.0)
    assert trace and trace[-1][0] == 32.0


def test_invariant_measure_normalized_and_positive():
    for beta in (0.0, 1.0, 8.0):
        states, pi = invariant_measure(TWO_STRATEGY, 8, beta)
        assert abs(pi.sum() - 1.0) <= 1e-10
        assert np.all(pi > 0)


def test_invariant_measure_mass_monotone_in_beta():
    conv = (8, 0)
    masses = []
    for beta in (1.0, 2.0, 4.0, 8.0):
        states, pi = invariant_measure(TWO_STRATEGY, 8, beta)
        masses.append(pi[states.index(conv)])
    assert all(b > a for a, b in zip(masses, masses[1:]))


def test_invariant_measure_guardrail():
    with pytest.raises(GuardrailExceeded):
        invariant_measure(TECH, 500, 1.0)


def test_beta_ladder_reaches_majority_before_cap():
    trace = beta_ladder_trace(TWO_STRATEGY, 8, 0)
    assert trace[-1][1] > 0.5
    assert trace[-1][0] <= 64.0
    masses = [m for _, m in trace]
    assert all(b > a for a, b in zip(masses, masses[1:]))


def test_invariant_argmax_is_stable_convention():
    rep = maxmin_test(TECH_UNEVEN)
    states, pi = invariant_measure(TECH_UNEVEN, 10, 4.0)
    top = states[int(np.argmax(pi))]
    assert top == convention_state(TECH_UNEVEN, 10, rep.stable)


def test_resolve_stability_oracle_fallback():
    analysis = resolve_stability(TECH_UNEVEN, oracle_n=30, measure_n=8)
    assert analysis.stable == 2
    assert analysis.oracle_roots is not None
    assert 2 in analysis.oracle_roots
    assert analysis.measure_trace is not None
    assert analysis.measure_trace[-1][1] > 0.5
