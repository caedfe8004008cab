"""Discrete simplex state space, payoffs, per-step costs, and revision kernels.

States are plain tuples of agent counts: a one-population state is a
length-k tuple summing to n, a two-population state is a pair
``(alpha_counts, beta_counts)`` with both summing to n.  The population
size is always recoverable as ``sum(counts)``, so it is not carried
separately.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterator, Optional, Sequence

import numpy as np

from .errors import (
    AdjacencyError,
    ConditionError,
    GuardrailExceeded,
    InfeasibleMoveError,
    UnsupportedRuleError,
)
from .games import Game, OnePopGame, TwoPopGame

State = tuple  # tuple[int, ...] (one-pop) or (tuple[int, ...], tuple[int, ...])

INVARIANT_MEASURE_STATE_CAP = 50_000


class CostRule(Enum):
    """Revision rules the per-step cost is defined for.

    LOGIT is the unintentional logit rule; INTENTIONAL restricts deviations
    to strategies whose convention payoff would improve the deviator's
    population (two-population games only); UNIFORM charges one unit per
    non-best-response; BETTER_REPLY charges the payoff drop relative to the
    agent's current strategy.
    """

    LOGIT = "logit"
    INTENTIONAL = "intentional"
    UNIFORM = "uniform"
    BETTER_REPLY = "better"


@dataclass(frozen=True)
class Move:
    """A single agent's switch from ``src`` to ``dst``.

    ``pop`` is None for one-population games, else "alpha" or "beta".
    """

    src: int
    dst: int
    pop: Optional[str] = None


def is_two_pop_state(state: State) -> bool:
    return len(state) == 2 and isinstance(state[0], tuple)


def apply_move(state: State, move: Move) -> State:
    if move.pop is None:
        if state[move.src] < 1:
            raise InfeasibleMoveError(f"no agent plays strategy {move.src}")
        c = list(state)
        c[move.src] -= 1
        c[move.dst] += 1
        return tuple(c)
    side = 0 if move.pop == "alpha" else 1
    counts = list(state[side])
    if counts[move.src] < 1:
        raise InfeasibleMoveError(f"no {move.pop} agent plays strategy {move.src}")
    counts[move.src] -= 1
    counts[move.dst] += 1
    out = list(state)
    out[side] = tuple(counts)
    return tuple(out)


def move_between(x: State, y: State) -> Move:
    """The unique move turning ``x`` into ``y``; AdjacencyError otherwise."""
    if is_two_pop_state(x) != is_two_pop_state(y):
        raise AdjacencyError("mixed one- and two-population states")
    if is_two_pop_state(x):
        if x[0] == y[0]:
            inner = move_between(x[1], y[1])
            return Move(inner.src, inner.dst, "beta")
        if x[1] == y[1]:
            inner = move_between(x[0], y[0])
            return Move(inner.src, inner.dst, "alpha")
        raise AdjacencyError("both populations changed in one step")
    diff = [b - a for a, b in zip(x, y)]
    src = [i for i, d in enumerate(diff) if d == -1]
    dst = [i for i, d in enumerate(diff) if d == 1]
    if len(src) != 1 or len(dst) != 1 or any(d not in (-1, 0, 1) for d in diff):
        raise AdjacencyError(f"states {x} -> {y} are not one move apart")
    return Move(src[0], dst[0])


def convention_state(game: Game, n: int, m: int) -> State:
    """The monomorphic state where every agent plays ``m``."""
    e = tuple(n if i == m else 0 for i in range(game.k))
    if isinstance(game, TwoPopGame):
        return (e, e)
    return e


# ---------------------------------------------------------------------------
# Payoffs


def payoff_vector(game: OnePopGame, counts: Sequence[int]) -> np.ndarray:
    """Expected payoff of each strategy at the state given by ``counts``."""
    c = np.asarray(counts, dtype=float)
    return game.payoffs @ c / c.sum()


def payoff_vector_alpha(game: TwoPopGame, beta_counts: Sequence[int]) -> np.ndarray:
    c = np.asarray(beta_counts, dtype=float)
    return game.alpha @ c / c.sum()


def payoff_vector_beta(game: TwoPopGame, alpha_counts: Sequence[int]) -> np.ndarray:
    c = np.asarray(alpha_counts, dtype=float)
    return c @ game.beta / c.sum()


def payoff(game: Game, i: int, state: State, pop: Optional[str] = None) -> float:
    """Expected payoff to strategy ``i`` at ``state`` (``pop`` for two-pop games)."""
    if isinstance(game, TwoPopGame):
        if pop == "alpha":
            return float(payoff_vector_alpha(game, state[1])[i])
        if pop == "beta":
            return float(payoff_vector_beta(game, state[0])[i])
        raise ConditionError("two-population payoff needs pop='alpha' or 'beta'")
    return float(payoff_vector(game, state)[i])


def _pop_payoffs(game: TwoPopGame, state: State, pop: str) -> np.ndarray:
    if pop == "alpha":
        return payoff_vector_alpha(game, state[1])
    return payoff_vector_beta(game, state[0])


# ---------------------------------------------------------------------------
# Basins of attraction


def in_basin(game: Game, state: State, m: int) -> bool:
    """Weak-inequality basin membership: ``m`` is a (possibly tied) best reply."""
    if isinstance(game, TwoPopGame):
        pa = payoff_vector_alpha(game, state[1])
        pb = payoff_vector_beta(game, state[0])
        return bool(pa[m] >= pa.max() and pb[m] >= pb.max())
    pi = payoff_vector(game, state)
    return bool(pi[m] >= pi.max())


def basin(game: OnePopGame, n: int, m: int, guardrail: int = 1_000_000) -> frozenset:
    """All states of the size-n simplex where ``m`` is a weak best reply."""
    total = num_states(n, game.k)
    if total > guardrail:
        raise GuardrailExceeded(
            f"{total} states exceeds the cap of {guardrail}; "
            "raise the guardrail explicitly to proceed"
        )
    return frozenset(s for s in enumerate_states(n, game.k) if in_basin(game, s, m))


# ---------------------------------------------------------------------------
# Step costs


def hat_s(game: TwoPopGame, pop: str, state: State) -> frozenset[int]:
    """Permissible deviation targets under the intentional rule at ``state``.

    A strategy is permissible when its convention payoff weakly beats the
    convention payoff of every current best reply of ``pop``.
    """
    pay = _pop_payoffs(game, state, pop)
    best = pay.max()
    mat = game.matrix(pop)
    current = [m for m in range(game.k) if pay[m] == best]
    cutoff = max(mat[m, m] for m in current)
    return frozenset(l for l in range(game.k) if mat[l, l] >= cutoff)


def step_cost(game: Game, rule: CostRule, state: State, move: Move) -> float:
    """Exponential decay rate of the move's probability under ``rule``.

    Nonnegative; zero exactly on best-response targets; +inf for moves the
    intentional rule forbids.
    """
    if isinstance(game, TwoPopGame):
        if move.pop not in ("alpha", "beta"):
            raise ConditionError("two-population moves need pop='alpha' or 'beta'")
        side = 0 if move.pop == "alpha" else 1
        if state[side][move.src] < 1:
            raise InfeasibleMoveError(
                f"no {move.pop} agent plays strategy {move.src}"
            )
        pay = _pop_payoffs(game, state, move.pop)
        if rule is CostRule.LOGIT:
            return float(pay.max() - pay[move.dst])
        if rule is CostRule.INTENTIONAL:
            if move.dst not in hat_s(game, move.pop, state):
                return math.inf
            return float(pay.max() - pay[move.dst])
        if rule is CostRule.UNIFORM:
            return 0.0 if pay[move.dst] == pay.max() else 1.0
        if rule is CostRule.BETTER_REPLY:
            return float(max(pay[move.src] - pay[move.dst], 0.0))
        raise UnsupportedRuleError(f"unknown rule {rule}")
    if move.pop is not None:
        raise ConditionError("one-population moves must not carry a pop tag")
    if state[move.src] < 1:
        raise InfeasibleMoveError(f"no agent plays strategy {move.src}")
    pi = payoff_vector(game, state)
    if rule is CostRule.LOGIT:
        return float(pi.max() - pi[move.dst])
    if rule is CostRule.UNIFORM:
        return 0.0 if pi[move.dst] == pi.max() else 1.0
    if rule is CostRule.BETTER_REPLY:
        return float(max(pi[move.src] - pi[move.dst], 0.0))
    if rule is CostRule.INTENTIONAL:
        raise UnsupportedRuleError(
            "the intentional rule is defined for two-population games only"
        )
    raise UnsupportedRuleError(f"unknown rule {rule}")


def _choice_costs(game: Game, rule: CostRule, state: State, src: int,
                  pop: Optional[str]) -> np.ndarray:
    """Cost of each possible choice (including re-choosing ``src``)."""
    if isinstance(game, TwoPopGame):
        pay = _pop_payoffs(game, state, pop)
        if rule is CostRule.LOGIT:
            return pay.max() - pay
        if rule is CostRule.INTENTIONAL:
            allowed = hat_s(game, pop, state)
            costs = pay.max() - pay
            return np.where(
                [l in allowed for l in range(game.k)], costs, np.inf
            )
        if rule is CostRule.UNIFORM:
            return np.where(pay == pay.max(), 0.0, 1.0)
        if rule is CostRule.BETTER_REPLY:
            return np.maximum(pay[src] - pay, 0.0)
        raise UnsupportedRuleError(f"unknown rule {rule}")
    pi = payoff_vector(game, state)
    if rule is CostRule.LOGIT:
        return pi.max() - pi
    if rule is CostRule.UNIFORM:
        return np.where(pi == pi.max(), 0.0, 1.0)
    if rule is CostRule.BETTER_REPLY:
        return np.maximum(pi[src] - pi, 0.0)
    raise UnsupportedRuleError(f"rule {rule} has no one-population kernel")


def _choice_probabilities(costs: np.ndarray, beta: float) -> np.ndarray:
    """Softmax of -beta * cost, stable for large beta; inf costs get weight 0."""
    finite = np.isfinite(costs)
    if not finite.any():
        raise ConditionError("no permissible choice at this state")
    shifted = np.where(finite, costs - costs[finite].min(), np.inf)
    w = np.zeros_like(costs)
    w[finite] = np.exp(-beta * shifted[finite])
    return w / w.sum()


def transition_probability(
    game: Game, rule: CostRule, state: State, move: Move, beta: float
) -> float:
    """Probability that one revision step produces exactly ``move``.

    A revising agent is drawn uniformly (for two populations: population
    with probability 1/2 each, then an agent uniformly inside it), then
    chooses among all strategies with log-weights ``-beta * cost``.  Under
    the logit rules this is the standard logit kernel; self-transitions
    absorb the remaining mass.
    """
    if not np.isfinite(beta) or beta < 0:
        raise ConditionError("beta must be finite and nonnegative")
    if isinstance(game, TwoPopGame):
        side = 0 if move.pop == "alpha" else 1
        counts = state[side]
        n = sum(counts)
        if counts[move.src] < 1:
            return 0.0
        probs = _choice_probabilities(
            _choice_costs(game, rule, state, move.src, move.pop), beta
        )
        return 0.5 * counts[move.src] / n * float(probs[move.dst])
    counts = state
    n = sum(counts)
    if counts[move.src] < 1:
        return 0.0
    probs = _choice_probabilities(
        _choice_costs(game, rule, state, move.src, None), beta
    )
    return counts[move.src] / n * float(probs[move.dst])


# ---------------------------------------------------------------------------
# Paths


def path_cost(game: Game, rule: CostRule, states: Sequence[State]) -> float:
    """Total cost of a state sequence; +inf propagates; 0 for trivial paths."""
    total = 0.0
    for x, y in zip(states, states[1:]):
        mv = move_between(x, y)
        c = step_cost(game, rule, x, mv)
        if math.isinf(c):
            return math.inf
        total += c
    return total


# ---------------------------------------------------------------------------
# State enumeration and ranking


def num_states(n: int, k: int) -> int:
    return math.comb(n + k - 1, k - 1)


def comp_rank(counts: Sequence[int]) -> int:
    """Colexicographic rank of a count vector among all of its (n, k) peers."""
    r = 0
    s = 0
    for i in range(1, len(counts)):
        s += counts[i - 1]
        r += math.comb(s + i - 1, i)
    return r


def enumerate_states(n: int, k: int) -> Iterator[tuple]:
    """All count vectors summing to n, in increasing colexicographic rank."""
    if k == 1:
        yield (n,)
        return
    for s in range(n + 1):
        for head in enumerate_states(s, k - 1):
            yield head + (n - s,)


def enumerate_two_pop_states(n: int, k: int) -> Iterator[State]:
    for a in enumerate_states(n, k):
        for b in enumerate_states(n, k):
            yield (a, b)


def moves_from(game: Game, state: State) -> Iterator[Move]:
    """Feasible single-agent moves out of ``state``, in canonical order."""
    k = game.k
    if isinstance(game, TwoPopGame):
        for side, pop in ((0, "alpha"), (1, "beta")):
            counts = state[side]
            for i in range(k):
                if counts[i] < 1:
                    continue
                for j in range(k):
                    if j != i:
                        yield Move(i, j, pop)
        return
    for i in range(k):
        if state[i] < 1:
            continue
        for j in range(k):
            if j != i:
                yield Move(i, j)


# ---------------------------------------------------------------------------
# Full revision kernel


def transition_matrix(
    game: Game, n: int, beta: float, rule: CostRule = CostRule.LOGIT,
    guardrail: int = INVARIANT_MEASURE_STATE_CAP,
) -> tuple[list, np.ndarray]:
    """Dense one-step kernel over the enumerated state space.

    Returns (states, P) with P[a, b] the probability of moving from
    states[a] to states[b]; rows sum to one.
    """
    if isinstance(game, TwoPopGame):
        total = num_states(n, game.k) ** 2
        if total > guardrail:
            raise GuardrailExceeded(f"{total} state pairs exceeds cap {guardrail}")
        states = list(enumerate_two_pop_states(n, game.k))
    else:
        total = num_states(n, game.k)
        if total > guardrail:
            raise GuardrailExceeded(f"{total} states exceeds cap {guardrail}")
        states = list(enumerate_states(n, game.k))
    index = {s: a for a, s in enumerate(states)}
    P = np.zeros((len(states), len(states)))
    for a, s in enumerate(states):
        acc = 0.0
        for mv in moves_from(game, s):
            p = transition_probability(game, rule, s, mv, beta)
            if p == 0.0:
                continue
            P[a, index[apply_move(s, mv)]] += p
            acc += p
        P[a, a] += 1.0 - acc
    return states, P
