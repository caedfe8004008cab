"""Stochastic stability: radius and transition-cost matrices, the maxmin
sufficient tests, minimum-cost rooted trees, and exact finite-noise
stationary distributions."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .chain import CostRule, convention_state, transition_matrix
from .errors import ConditionError, GuardrailExceeded, LdlError, UnsupportedRuleError
from .escape import (
    EscapeResult,
    _basin_test,
    _dijkstra,
    _one_pop_edges,
    _reconstruct,
    _two_pop_edges,
    escape_term_two_pop,
    pairwise_escape_term,
)
from .games import TwoPopGame

NEAR_TIE = 1e-9
DENSE_SOLVE_CAP = 2_000
INVARIANT_STATE_CAP = 50_000
EXHAUSTIVE_TREE_CAP = 9
BETA_CAP = 64.0


@dataclass(frozen=True)
class RadiusMatrix:
    """Limit escape costs between ordered convention pairs.

    ``values[i, j]`` is the closed-form cost of tipping convention i toward
    j; the diagonal is NaN.
    """

    values: np.ndarray
    rule: CostRule
    provenance: str = "closed-form"

    @property
    def k(self) -> int:
        return self.values.shape[0]

    def radius(self, i: int) -> float:
        row = np.delete(self.values[i], i)
        return float(row.min())


def radius_matrix(game, rule: CostRule = CostRule.LOGIT) -> RadiusMatrix:
    k = game.k
    values = np.full((k, k), np.nan)
    if isinstance(game, TwoPopGame):
        if rule not in (CostRule.LOGIT, CostRule.INTENTIONAL):
            raise UnsupportedRuleError(
                "two-population radii exist for the logit rules only"
            )
        for m in range(k):
            for j in range(k):
                if j != m:
                    values[m, j] = escape_term_two_pop(game, m, j, rule)[0]
    else:
        for m in range(k):
            for j in range(k):
                if j != m:
                    values[m, j] = pairwise_escape_term(game, m, j, rule)
    values.flags.writeable = False
    return RadiusMatrix(values, rule)


def incidence(values: np.ndarray, tol: float = NEAR_TIE) -> np.ndarray:
    """Row-wise argmin indicator; near-ties within ``tol`` all get a 1."""
    k = values.shape[0]
    inc = np.zeros((k, k), dtype=int)
    for i in range(k):
        row = [(values[i, j], j) for j in range(k) if j != i]
        lo = min(v for v, _ in row)
        for v, j in row:
            if v <= lo + tol:
                inc[i, j] = 1
    return inc


def cycles(inc: np.ndarray) -> list[tuple[int, ...]]:
    """All simple directed cycles of the incidence graph, canonically rotated."""
    k = inc.shape[0]
    found = set()

    def dfs(path: list[int]):
        head = path[-1]
        for nxt in range(k):
            if not inc[head, nxt]:
                continue
            if nxt == path[0]:
                cyc = tuple(path)
                lo = cyc.index(min(cyc))
                found.add(cyc[lo:] + cyc[:lo])
            elif nxt not in path and nxt > path[0]:
                dfs(path + [nxt])

    for start in range(k):
        dfs([start])
    out = sorted(found)
    if not out:
        raise LdlError("an incidence graph always contains a cycle")
    return out


@dataclass(frozen=True)
class StabilityReport:
    """Maxmin analysis of a radius (or transition-cost) matrix."""

    radii: tuple[float, ...]
    candidates: tuple[int, ...]
    local_resistance: bool
    unique_cycle: bool
    cycle_list: tuple[tuple[int, ...], ...]
    stable: Optional[int]
    note: str = ""

    @property
    def conclusive(self) -> bool:
        return self.stable is not None


def maxmin_test_matrix(values: np.ndarray) -> StabilityReport:
    k = values.shape[0]
    radii = tuple(
        float(min(values[i, j] for j in range(k) if j != i)) for i in range(k)
    )
    hi = max(radii)
    candidates = tuple(i for i in range(k) if radii[i] >= hi - NEAR_TIE)
    cyc = tuple(cycles(incidence(values)))
    if len(candidates) != 1:
        return StabilityReport(
            radii, candidates, False, len(cyc) == 1, cyc, None,
            "tied maxmin candidates; inconclusive",
        )
    i_star = candidates[0]
    inbound = max(values[j, i_star] for j in range(k) if j != i_star)
    outbound = radii[i_star]
    local = inbound < outbound - NEAR_TIE
    unique = len(cyc) == 1 and i_star in cyc[0]
    stable = i_star if (local or unique) else None
    note = "" if stable is not None else "neither sufficient test holds"
    return StabilityReport(radii, candidates, local, unique, cyc, stable, note)


def maxmin_test(game, rule: CostRule = CostRule.LOGIT) -> StabilityReport:
    """Sufficient-condition test on the closed-form radius matrix.

    Inconclusive reports (ties, or neither test holding) leave ``stable``
    unset; resolve them with the oracle operations below instead of guessing.
    """
    return maxmin_test_matrix(radius_matrix(game, rule).values)


# ---------------------------------------------------------------------------
# Exact transition costs between conventions


def transition_cost_bruteforce(
    game,
    n: int,
    i: int,
    j: int,
    rule: CostRule = CostRule.LOGIT,
    guardrail: Optional[int] = None,
) -> EscapeResult:
    """Exact minimum cost of travelling from convention i into j's basin.

    Least-cost search over the whole simplex; unlike the escape problem the
    path may cross other basins on the way.
    """
    if i == j:
        raise ConditionError("source and destination conventions must differ")
    two_pop = isinstance(game, TwoPopGame)
    if guardrail is None:
        guardrail = 10_000_000 if two_pop else 1_000_000
    edges = _two_pop_edges(game, rule) if two_pop else _one_pop_edges(game, rule)
    target = _basin_test(game, j)
    start = convention_state(game, n, i)
    end, cost, parent = _dijkstra(
        start,
        edges,
        expandable=lambda s: not target(s),
        terminal=target,
        guardrail=guardrail,
    )
    return EscapeResult(
        n=n,
        convention=i,
        rule=rule,
        cost=cost,
        normalized=cost / n,
        witness=_reconstruct(parent, end),
        provenance="oracle",
    )


def transition_cost_matrix(
    game, n: int, rule: CostRule = CostRule.LOGIT,
    guardrail: Optional[int] = None,
) -> np.ndarray:
    """Normalized exact transition costs for every ordered convention pair."""
    k = game.k
    out = np.full((k, k), np.nan)
    for i in range(k):
        for j in range(k):
            if i != j:
                out[i, j] = transition_cost_bruteforce(
                    game, n, i, j, rule, guardrail
                ).normalized
    return out


# ---------------------------------------------------------------------------
# Minimum-cost rooted trees


def _tree_cost_exhaustive(values: np.ndarray, root: int) -> float:
    k = values.shape[0]
    others = [v for v in range(k) if v != root]
    best = math.inf
    for parents in itertools.product(range(k), repeat=len(others)):
        if any(p == v for v, p in zip(others, parents)):
            continue
        # every vertex must reach the root through the parent map
        ok = True
        lookup = dict(zip(others, parents))
        for v in others:
            seen = set()
            cur = v
            while cur != root:
                if cur in seen:
                    ok = False
                    break
                seen.add(cur)
                cur = lookup[cur]
            if not ok:
                break
        if not ok:
            continue
        cost = sum(values[v, p] for v, p in zip(others, parents))
        best = min(best, cost)
    return best


def _tree_cost_edmonds(values: np.ndarray, root: int) -> float:
    """Minimum spanning in-tree cost by cycle contraction.

    Works on the reversed graph so the usual out-arborescence recursion
    applies: arc (u, v) there carries the original cost values[v, u].
    """
    k = values.shape[0]
    arcs = [
        (u, v, float(values[v, u]))
        for u in range(k)
        for v in range(k)
        if u != v and v != root
    ]

    def solve(nodes: list[int], arcs: list[tuple], root: int) -> float:
        best_in = {}
        for u, v, w in arcs:
            if v != root and (v not in best_in or w < best_in[v][2]):
                best_in[v] = (u, v, w)
        for v in nodes:
            if v != root and v not in best_in:
                raise LdlError("disconnected cost matrix")
        # hunt for a cycle among the chosen arcs
        cyc = None
        for v in nodes:
            if v == root:
                continue
            seen = [v]
            cur = v
            while True:
                cur = best_in[cur][0]
                if cur == root:
                    break
                if cur in seen:
                    cyc = seen[seen.index(cur):]
                    break
                seen.append(cur)
            if cyc:
                break
        if not cyc:
            return sum(a[2] for a in best_in.values())
        cyc_set = set(cyc)
        cyc_cost = sum(best_in[v][2] for v in cyc)
        super_node = max(nodes) + 1
        new_nodes = [v for v in nodes if v not in cyc_set] + [super_node]
        new_arcs = []
        for u, v, w in arcs:
            if u in cyc_set and v in cyc_set:
                continue
            if v in cyc_set:
                new_arcs.append((u, super_node, w - best_in[v][2]))
            elif u in cyc_set:
                new_arcs.append((super_node, v, w))
            else:
                new_arcs.append((u, v, w))
        return cyc_cost + solve(new_nodes, new_arcs, root)

    return solve(list(range(k)), arcs, root)


@dataclass(frozen=True)
class ArborescenceResult:
    roots: tuple[int, ...]
    tree_costs: tuple[float, ...]
    method: str


def arborescence_root(values: np.ndarray, method: str = "auto") -> ArborescenceResult:
    """Roots of the cheapest spanning in-trees of a complete cost matrix.

    ``method`` is "exhaustive" (refused above 9 vertices), "edmonds", or
    "auto" (exhaustive up to 6 vertices, contraction beyond).
    """
    values = np.asarray(values, dtype=float)
    k = values.shape[0]
    if method == "auto":
        method = "exhaustive" if k <= 6 else "edmonds"
    if method == "exhaustive" and k > EXHAUSTIVE_TREE_CAP:
        raise GuardrailExceeded(
            f"exhaustive tree search is refused beyond {EXHAUSTIVE_TREE_CAP} vertices"
        )
    solver = _tree_cost_exhaustive if method == "exhaustive" else _tree_cost_edmonds
    costs = tuple(solver(values, r) for r in range(k))
    lo = min(costs)
    roots = tuple(r for r in range(k) if costs[r] <= lo + NEAR_TIE)
    return ArborescenceResult(roots, costs, method)


# ---------------------------------------------------------------------------
# Exact stationary distributions


def _gth_stationary(P: np.ndarray) -> np.ndarray:
    """Stationary distribution by state-censoring elimination.

    Subtraction-free, so it stays accurate on stiff kernels (large beta)
    where a generic LU solve of pi P = pi loses the tiny couplings.
    """
    A = np.array(P, dtype=float)
    size = A.shape[0]
    depart = np.empty(size)
    tiny = np.finfo(float).tiny
    for k in range(size - 1, 0, -1):
        s = A[k, :k].sum()
        if s <= tiny:
            raise LdlError(
                "stationary solve lost conditioning: transition weights "
                "underflow at this noise level"
            )
        depart[k] = s
        A[k, :k] /= s
        A[:k, :k] += np.outer(A[:k, k], A[k, :k])
    with np.errstate(over="raise", invalid="raise"):
        try:
            x = np.zeros(size)
            x[0] = 1.0
            for k in range(1, size):
                x[k] = (x[:k] @ A[:k, k]) / depart[k]
        except FloatingPointError as exc:
            raise LdlError(
                "stationary solve lost conditioning: transition weights "
                "underflow at this noise level"
            ) from exc
    if not np.all(np.isfinite(x)):
        raise LdlError("stationary solve produced non-finite mass")
    return x / x.sum()


def invariant_measure(
    game, n: int, beta: float, rule: CostRule = CostRule.LOGIT,
    guardrail: int = INVARIANT_STATE_CAP,
) -> tuple[list, np.ndarray]:
    """Exact stationary distribution of the revision chain.

    Dense censoring elimination up to 2,000 states, deterministic power
    iteration to a 1e-12 residual beyond.  The chain is irreducible for
    finite beta, so the distribution is unique and strictly positive.
    """
    states, P = transition_matrix(game, n, beta, rule, guardrail=guardrail)
    size = len(states)
    if size <= DENSE_SOLVE_CAP:
        pi = _gth_stationary(P)
    else:
        pi = np.full(size, 1.0 / size)
        for _ in range(200_000):
            nxt = pi @ P
            nxt /= nxt.sum()
            if np.abs(nxt - pi).max() <= 1e-12:
                pi = nxt
                break
            pi = nxt
    pi = np.maximum(pi, 0.0)
    pi /= pi.sum()
    return states, pi


def convention_mass(game, n: int, beta: float, m: int,
                    rule: CostRule = CostRule.LOGIT) -> float:
    states, pi = invariant_measure(game, n, beta, rule)
    target = convention_state(game, n, m)
    return float(pi[states.index(target)])


def beta_ladder_trace(
    game,
    n: int,
    m: int,
    rule: CostRule = CostRule.LOGIT,
    beta0: float = 1.0,
    mass_target: float = 0.5,
    beta_cap: float = BETA_CAP,
) -> list[tuple[float, float]]:
    """Stationary mass of convention ``m`` while doubling beta.

    Stops as soon as the mass exceeds ``mass_target``, beta passes the cap,
    or the solve loses conditioning; returns the sound (beta, mass) pairs.
    """
    out = []
    beta = beta0
    while beta <= beta_cap:
        try:
            mass = convention_mass(game, n, beta, m, rule)
        except LdlError:
            break
        out.append((beta, mass))
        if mass > mass_target:
            break
        beta *= 2.0
    return out


# ---------------------------------------------------------------------------
# Orchestration


@dataclass(frozen=True)
class StabilityAnalysis:
    report: StabilityReport
    radius: RadiusMatrix
    oracle_costs: Optional[np.ndarray] = None
    oracle_roots: Optional[tuple[int, ...]] = None
    measure_trace: Optional[list] = None
    stable: Optional[int] = None


def resolve_stability(
    game,
    rule: CostRule = CostRule.LOGIT,
    oracle_n: Optional[int] = None,
    measure_n: Optional[int] = None,
    guardrail: Optional[int] = None,
) -> StabilityAnalysis:
    """Maxmin test first; fall back to the exact-cost tree oracle if asked.

    When the maxmin test is inconclusive and ``oracle_n`` is given, the
    exact transition costs at that population size decide via the minimal
    rooted tree.
    """
    rm = radius_matrix(game, rule)
    report = maxmin_test_matrix(rm.values)
    oracle_costs = None
    oracle_roots = None
    stable = report.stable
    if oracle_n is not None:
        oracle_costs = transition_cost_matrix(game, oracle_n, rule, guardrail)
        oracle_roots = arborescence_root(oracle_costs).roots
        if stable is None and len(oracle_roots) == 1:
            stable = oracle_roots[0]
    trace = None
    if measure_n is not None and stable is not None:
        trace = beta_ladder_trace(game, measure_n, stable, rule)
    return StabilityAnalysis(report, rm, oracle_costs, oracle_roots, trace, stable)
