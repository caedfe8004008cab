"""Minimum-cost escape from a convention.

Three routes to the same number: an exact Dijkstra oracle over the discrete
state space, a search restricted to block paths, and the closed-form
infinite-population limits.  The oracle and the reduced search agree exactly
at every population size; the limits are their asymptotic value.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .chain import (
    CostRule,
    Move,
    State,
    apply_move,
    convention_state,
    path_cost,
)
from .errors import (
    ConditionError,
    GuardrailExceeded,
    LdlError,
    UnsupportedRuleError,
)
from .games import (
    OnePopGame,
    TwoPopGame,
    tilde_s,
    validate_one_pop,
    validate_two_pop,
)
from .paths import BlockSpec, Path, enumerate_block_paths

ONE_POP_SEARCH_CAP = 1_000_000
TWO_POP_SEARCH_CAP = 10_000_000


@dataclass(frozen=True)
class EscapeResult:
    """Outcome of an escape (or transition) cost computation.

    ``n`` is None for infinite-population limits, in which case ``cost``
    and ``normalized`` coincide.  ``argmin_targets`` lists every strategy
    attaining the limit minimum; ``driving_population`` is set for
    two-population limits.
    """

    n: Optional[int]
    convention: int
    rule: CostRule
    cost: float
    normalized: float
    witness: Optional[Path] = None
    block: Optional[BlockSpec] = None
    argmin_targets: Optional[tuple[int, ...]] = None
    driving_population: Optional[str] = None
    provenance: str = "oracle"


# ---------------------------------------------------------------------------
# Cached edge-cost generators for the searches


def _one_pop_edges(game: OnePopGame, rule: CostRule) -> Callable:
    a = game.payoffs
    k = game.k
    cache: dict = {}

    def edges(state: State):
        hit = cache.get(state)
        if hit is not None:
            return hit
        c = np.asarray(state, dtype=float)
        pi = a @ c / c.sum()
        top = pi.max()
        out = []
        for i in range(k):
            if state[i] < 1:
                continue
            for j in range(k):
                if j == i:
                    continue
                if rule is CostRule.LOGIT:
                    w = top - pi[j]
                elif rule is CostRule.UNIFORM:
                    w = 0.0 if pi[j] == top else 1.0
                elif rule is CostRule.BETTER_REPLY:
                    w = max(pi[i] - pi[j], 0.0)
                else:
                    raise UnsupportedRuleError(
                        "intentional dynamics need a two-population game"
                    )
                out.append((Move(i, j), w))
        cache[state] = out
        return out

    return edges


def _two_pop_side_costs(game: TwoPopGame, rule: CostRule):
    """Per-component caches: target costs for each population's moves.

    An alpha move's cost depends only on the beta counts and the target
    (plus the source under the better-reply rule); symmetrically for beta.
    """
    mats = {"alpha": game.alpha, "beta": game.beta}
    k = game.k
    caches = {"alpha": {}, "beta": {}}

    def payoffs(pop: str, other_counts: tuple) -> np.ndarray:
        c = np.asarray(other_counts, dtype=float)
        if pop == "alpha":
            return mats["alpha"] @ c / c.sum()
        return c @ mats["beta"] / c.sum()

    def target_costs(pop: str, other_counts: tuple):
        cache = caches[pop]
        hit = cache.get(other_counts)
        if hit is not None:
            return hit
        pay = payoffs(pop, other_counts)
        top = pay.max()
        if rule in (CostRule.LOGIT, CostRule.BETTER_REPLY):
            costs = top - pay
        elif rule is CostRule.UNIFORM:
            costs = np.where(pay == top, 0.0, 1.0)
        elif rule is CostRule.INTENTIONAL:
            mat = mats[pop]
            current = [m for m in range(k) if pay[m] == top]
            cutoff = max(mat[m, m] for m in current)
            costs = np.where(np.diag(mat) >= cutoff, top - pay, np.inf)
        else:
            raise UnsupportedRuleError(f"unknown rule {rule}")
        entry = (costs, pay)
        cache[other_counts] = entry
        return entry

    return target_costs


def _two_pop_edges(game: TwoPopGame, rule: CostRule) -> Callable:
    k = game.k
    target_costs = _two_pop_side_costs(game, rule)

    def edges(state: State):
        a_counts, b_counts = state
        out = []
        for pop, counts, other in (("alpha", a_counts, b_counts),
                                   ("beta", b_counts, a_counts)):
            costs, pay = target_costs(pop, other)
            for i in range(k):
                if counts[i] < 1:
                    continue
                for j in range(k):
                    if j == i:
                        continue
                    if rule is CostRule.BETTER_REPLY:
                        w = max(pay[i] - pay[j], 0.0)
                    else:
                        w = float(costs[j])
                    if math.isinf(w):
                        continue
                    out.append((Move(i, j, pop), w))
        return out

    return edges


def _basin_test(game, m: int) -> Callable:
    """Membership test for the basin of convention ``m`` with caching."""
    if isinstance(game, TwoPopGame):
        side_ok: dict = {"alpha": {}, "beta": {}}
        mats = {"alpha": game.alpha, "beta": game.beta}

        def component_ok(pop: str, other_counts: tuple) -> bool:
            cache = side_ok[pop]
            hit = cache.get(other_counts)
            if hit is None:
                c = np.asarray(other_counts, dtype=float)
                pay = mats[pop] @ c if pop == "alpha" else c @ mats[pop]
                hit = bool(pay[m] >= pay.max())
                cache[other_counts] = hit
            return hit

        def test(state: State) -> bool:
            return component_ok("alpha", state[1]) and component_ok("beta", state[0])

        return test

    a = game.payoffs
    cache: dict = {}

    def test(state: State) -> bool:
        hit = cache.get(state)
        if hit is None:
            pay = a @ np.asarray(state, dtype=float)
            hit = bool(pay[m] >= pay.max())
            cache[state] = hit
        return hit

    return test


def _dijkstra(
    start: State,
    edges: Callable,
    expandable: Callable,
    terminal: Callable,
    guardrail: int,
) -> tuple[State, float, dict]:
    """Least-cost search stopping at the first settled terminal state.

    Moves are relaxed in the canonical order the edge generator emits and
    only strict improvements update a state, so witnesses are deterministic.
    """
    dist = {start: 0.0}
    parent: dict = {start: None}
    heap = [(0.0, 0, start)]
    counter = 1
    settled = set()
    while heap:
        d, _, x = heapq.heappop(heap)
        if x in settled:
            continue
        settled.add(x)
        if terminal(x):
            return x, d, parent
        if len(settled) > guardrail:
            raise GuardrailExceeded(
                f"search expanded more than {guardrail} states; "
                "raise the guardrail to proceed"
            )
        if not expandable(x):
            continue
        for move, w in edges(x):
            y = apply_move(x, move)
            nd = d + w
            if nd < dist.get(y, math.inf):
                dist[y] = nd
                parent[y] = (x, move)
                heapq.heappush(heap, (nd, counter, y))
                counter += 1
    raise LdlError("no terminal state is reachable")


def _reconstruct(parent: dict, end: State) -> Path:
    states = [end]
    while parent[states[-1]] is not None:
        states.append(parent[states[-1]][0])
    return Path(tuple(reversed(states)))


def _require_strict_convention(game, m: int) -> None:
    if isinstance(game, TwoPopGame):
        ok = all(
            game.alpha[m, m] > game.alpha[j, m]
            and game.beta[m, m] > game.beta[m, j]
            for j in range(game.k)
            if j != m
        )
    else:
        a = game.payoffs
        ok = all(a[m, m] > a[j, m] for j in range(game.k) if j != m)
    if not ok:
        raise ConditionError(f"strategy {m} is not a strict Nash convention")


def _require_condition(game, m: int) -> None:
    report = (
        validate_two_pop(game, m)
        if isinstance(game, TwoPopGame)
        else validate_one_pop(game)
    )
    if not report.condition_holds:
        raise ConditionError(
            "game fails structural validation: " + "; ".join(report.failures())
        )


# ---------------------------------------------------------------------------
# Oracle and reduced solvers


def exit_bruteforce(
    game,
    n: int,
    mbar: int,
    rule: CostRule = CostRule.LOGIT,
    guardrail: Optional[int] = None,
    validate: bool = True,
) -> EscapeResult:
    """Exact minimum escape cost by least-cost search over the basin.

    Edges are single-agent moves, the terminal set is every state strictly
    outside the basin, and ties between equal-cost paths resolve to the
    first witness found under the canonical move order.
    """
    _require_strict_convention(game, mbar)
    if validate:
        _require_condition(game, mbar)
    two_pop = isinstance(game, TwoPopGame)
    if guardrail is None:
        guardrail = TWO_POP_SEARCH_CAP if two_pop else ONE_POP_SEARCH_CAP
    edges = _two_pop_edges(game, rule) if two_pop else _one_pop_edges(game, rule)
    inside = _basin_test(game, mbar)
    start = convention_state(game, n, mbar)
    end, cost, parent = _dijkstra(
        start,
        edges,
        expandable=inside,
        terminal=lambda s: not inside(s),
        guardrail=guardrail,
    )
    return EscapeResult(
        n=n,
        convention=mbar,
        rule=rule,
        cost=cost,
        normalized=cost / n,
        witness=_reconstruct(parent, end),
        provenance="oracle",
    )


def exit_reduced(
    game: OnePopGame,
    n: int,
    mbar: int,
    guardrail: Optional[int] = None,
    validate: bool = True,
) -> EscapeResult:
    """Minimum escape cost over block paths only (logit rule).

    Equals the oracle value exactly: under the structural conditions the
    block family always contains a globally minimal escape path.
    """
    if validate:
        _require_condition(game, mbar)
    kwargs = {} if guardrail is None else {"guardrail": guardrail}
    best: Optional[tuple[float, BlockSpec, tuple]] = None
    for spec in enumerate_block_paths(game, n, mbar, **kwargs):
        states = spec.realize(game.k, n, mbar)
        c = path_cost(game, CostRule.LOGIT, states)
        if best is None or c < best[0]:
            best = (c, spec, states)
    if best is None:
        raise LdlError("no block escape path exists")
    cost, spec, states = best
    return EscapeResult(
        n=n,
        convention=mbar,
        rule=CostRule.LOGIT,
        cost=cost,
        normalized=cost / n,
        witness=Path(states),
        block=spec,
        provenance="reduced",
    )


# ---------------------------------------------------------------------------
# Infinite-population limits


def pairwise_escape_term(game: OnePopGame, m: int, j: int,
                         rule: CostRule = CostRule.LOGIT) -> float:
    """Limit escape cost per unit population along the straight m -> j route.

    Logit: half the squared payoff drop over the total payoff swing; uniform:
    just the threshold fraction of deviators flipping the best response.
    """
    a = game.payoffs
    drop = a[m, m] - a[j, m]
    swing = drop + (a[j, j] - a[m, j])
    if swing <= 0:
        raise ConditionError(
            f"strategies {m}, {j} admit no interior pairwise equilibrium"
        )
    if rule is CostRule.LOGIT:
        return 0.5 * drop * drop / swing
    if rule is CostRule.UNIFORM:
        return drop / swing
    raise UnsupportedRuleError(f"no closed-form limit for rule {rule}")


def exit_limit_one_pop(
    game: OnePopGame, mbar: int, rule: CostRule = CostRule.LOGIT
) -> EscapeResult:
    """Closed-form limit of the normalized escape cost, with all argmins."""
    if rule not in (CostRule.LOGIT, CostRule.UNIFORM):
        raise UnsupportedRuleError(
            "no limit formula is available for this rule; use the oracle"
        )
    terms = {
        j: pairwise_escape_term(game, mbar, j, rule)
        for j in range(game.k)
        if j != mbar
    }
    lo = min(terms.values())
    argmins = tuple(sorted(j for j, v in terms.items() if v <= lo + 1e-9))
    return EscapeResult(
        n=None,
        convention=mbar,
        rule=rule,
        cost=lo,
        normalized=lo,
        argmin_targets=argmins,
        provenance="closed-form",
    )


def two_pop_thresholds(game: TwoPopGame, m: int, j: int) -> tuple[float, float]:
    """Threshold fractions (zeta_alpha, zeta_beta) flipping the best responses.

    zeta_alpha is the fraction of beta-deviators to ``j`` that makes ``j`` a
    best reply for alpha agents; zeta_beta is the mirror image.
    """
    a, b = game.alpha, game.beta
    da = a[m, m] - a[j, m]
    sa = da + (a[j, j] - a[m, j])
    db = b[m, m] - b[m, j]
    sb = db + (b[j, j] - b[j, m])
    if sa <= 0 or sb <= 0:
        raise ConditionError(
            f"strategies {m}, {j} admit no interior pairwise equilibrium"
        )
    return da / sa, db / sb


def escape_term_two_pop(
    game: TwoPopGame, m: int, j: int, rule: CostRule
) -> tuple[float, str]:
    """Limit cost of tipping convention m to j, and the deviating population."""
    a, b = game.alpha, game.beta
    zeta_a, zeta_b = two_pop_thresholds(game, m, j)
    beta_driven = (b[m, m] - b[m, j]) * zeta_a
    alpha_driven = (a[m, m] - a[j, m]) * zeta_b
    if rule is CostRule.LOGIT:
        if abs(beta_driven - alpha_driven) <= 1e-12:
            return beta_driven, "tie"
        if beta_driven < alpha_driven:
            return beta_driven, "beta"
        return alpha_driven, "alpha"
    if rule is CostRule.INTENTIONAL:
        in_alpha = j in tilde_s(game, m, "alpha")
        in_beta = j in tilde_s(game, m, "beta")
        if in_alpha and not in_beta:
            return alpha_driven, "alpha"
        if in_beta and not in_alpha:
            return beta_driven, "beta"
        raise ConditionError(
            f"strategy {j} is not exclusive to one population's preferred set"
        )
    raise UnsupportedRuleError(f"no two-population limit for rule {rule}")


def exit_limit_two_pop(
    game: TwoPopGame, m: int, rule: CostRule = CostRule.LOGIT
) -> EscapeResult:
    """Closed-form limit of the two-population escape cost from convention m."""
    if rule is CostRule.INTENTIONAL and not validate_two_pop(
        game, m
    ).conflict_of_interest:
        raise ConditionError(
            "the intentional limit requires conflicting population interests"
        )
    terms = {}
    for j in range(game.k):
        if j == m:
            continue
        terms[j] = escape_term_two_pop(game, m, j, rule)
    lo = min(v for v, _ in terms.values())
    argmins = tuple(sorted(j for j, (v, _) in terms.items() if v <= lo + 1e-9))
    driving = terms[argmins[0]][1]
    return EscapeResult(
        n=None,
        convention=m,
        rule=rule,
        cost=lo,
        normalized=lo,
        argmin_targets=argmins,
        driving_population=driving,
        provenance="closed-form",
    )
