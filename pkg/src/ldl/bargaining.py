"""Bargaining frontiers, the three division solutions, and the discrete
demand-game machinery that selects stochastically stable divisions.

The frontier family f(x) = (a (1 - x/b))**p with a, b > 0 and 0 < p < 1 is
decreasing and strictly concave by construction, covers both benchmark
frontiers used in the tests, and keeps every root bracketable.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import ConditionError

RESIDUAL_TOL = 1e-10
GRID_POINTS = 1000


@dataclass(frozen=True)
class Frontier:
    """Concave decreasing bargaining frontier f(x) = (a (1 - x/b))**p on [0, b]."""

    a: float
    b: float
    p: float

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0 and 0 < self.p < 1):
            raise ConditionError("frontier needs a > 0, b > 0, 0 < p < 1")
        xs = np.linspace(self.b * 1e-6, self.b * (1 - 1e-6), GRID_POINTS)
        fs = self.value(xs)
        d1 = self.derivative(xs)
        if np.any(fs < 0) or np.any(d1 >= 0):
            raise ConditionError("frontier fails positivity/monotonicity sampling")
        d2 = np.diff(d1)
        if np.any(d2 >= 0):
            raise ConditionError("frontier fails concavity sampling")

    @property
    def s_bar(self) -> float:
        return self.b

    def value(self, x):
        inner = np.maximum(1.0 - np.asarray(x, dtype=float) / self.b, 0.0)
        return (self.a * inner) ** self.p

    def __call__(self, x):
        out = self.value(x)
        return float(out) if np.ndim(x) == 0 else out

    def derivative(self, x):
        inner = np.maximum(1.0 - np.asarray(x, dtype=float) / self.b, 0.0)
        out = -(self.p * self.a / self.b) * (self.a * inner) ** (self.p - 1.0)
        return float(out) if np.ndim(x) == 0 else out


def _bisect(fn: Callable[[float], float], lo: float, hi: float,
            residual_tol: float = RESIDUAL_TOL, max_iter: int = 200) -> float:
    flo, fhi = fn(lo), fn(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if flo * fhi > 0:
        raise ConditionError("no sign change on the bracketing interval")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        fm = fn(mid)
        if fm == 0.0 or (hi - lo) <= 1e-15 * max(1.0, abs(mid)):
            break
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    mid = 0.5 * (lo + hi)
    if abs(fn(mid)) > residual_tol:
        raise ConditionError(f"bisection residual {fn(mid):.3e} above tolerance")
    return mid


@dataclass(frozen=True)
class BargainingSolutions:
    """The split each solution concept assigns to the first population."""

    s_nash: float
    s_intentional: float
    s_egalitarian: float

    @property
    def ordering(self) -> str:
        if abs(self.s_nash - self.s_egalitarian) <= 1e-9:
            return "coincident"
        if self.s_nash > self.s_intentional > self.s_egalitarian:
            return "nash_above"
        if self.s_egalitarian > self.s_intentional > self.s_nash:
            return "egalitarian_above"
        return "unordered"


def solve_solutions(frontier: Frontier) -> BargainingSolutions:
    """Roots of f/s = -f', (f/s)^2 = -f', and f(s) = s by bracketed bisection.

    Each defining function is strictly monotone on (0, s_bar), so the roots
    are unique; residuals are held below 1e-10.
    """
    s = frontier.s_bar
    lo = s * 1e-9
    hi = s * (1 - 1e-12)
    s_nb = _bisect(lambda x: frontier(x) / x + frontier.derivative(x), lo, hi)
    s_i = _bisect(
        lambda x: (frontier(x) / x) ** 2 + frontier.derivative(x), lo, hi
    )
    s_e = _bisect(lambda x: frontier(x) - x, lo, hi)
    return BargainingSolutions(s_nb, s_i, s_e)


# ---------------------------------------------------------------------------
# Demand-game transition terms


MAX_GRID = 100_000


def _grid_size(frontier: Frontier, delta: float) -> int:
    L = frontier.s_bar / delta
    if abs(L - round(L)) > 1e-9 or round(L) < 3:
        raise ConditionError("delta must divide s_bar into at least 3 cells")
    if round(L) > MAX_GRID:
        raise ConditionError(f"grid of {round(L)} cells exceeds the supported "
                             f"{MAX_GRID}")
    return int(round(L))


def rl_functions(frontier: Frontier, delta: float, m: float) -> tuple[float, float, float, float]:
    """The four neighbor-transition costs out of demand ``m``.

    r1/r2 price the move to the next higher demand (driven by the second and
    first population respectively); l1/l2 price the move to the next lower
    demand.  ``m`` may be fractional for crossing searches; it must keep the
    higher demand on the grid (m + 1 <= L - 1).
    """
    L = _grid_size(frontier, delta)
    if not 1 <= m <= L - 2:
        raise ConditionError(f"demand index {m} outside 1..{L - 2}")
    f = frontier
    x = delta * m
    r1 = (f(x) - f(x + delta)) * x / (x + delta)
    r2 = x * (f(x) - f(x + delta)) / f(x)
    l1 = f(x) * delta / x
    l2 = delta * f(x) / f(x - delta)
    return r1, r2, l1, l2


_TERM_POPULATION = {"r1": "beta", "r2": "alpha", "l1": "beta", "l2": "alpha"}
_TERM_DIRECTION = {"r1": +1, "r2": +1, "l1": -1, "l2": -1}


def _terms_at(frontier: Frontier, delta: float, m: int, L: int,
              rule: str) -> dict[str, float]:
    f = frontier
    x = delta * m
    terms = {}
    if m + 1 <= L - 1:
        if rule == "unintentional":
            terms["r1"] = (f(x) - f(x + delta)) * x / (x + delta)
        terms["r2"] = x * (f(x) - f(x + delta)) / f(x)
    if m - 1 >= 1:
        terms["l1"] = f(x) * delta / x
        if rule == "unintentional":
            terms["l2"] = delta * f(x) / f(x - delta)
    return terms


@dataclass(frozen=True)
class CrossingPoints:
    """Real-valued demand indices where opposing transition terms balance."""

    mu_star: Optional[float]        # r1 = l1
    mu_double_star: Optional[float]  # r2 = l2
    mu_intentional: Optional[float]  # r2 = l1


def crossings(frontier: Frontier, delta: float) -> CrossingPoints:
    L = _grid_size(frontier, delta)

    def cross(num_idx: int, den_idx: int) -> Optional[float]:
        def gap(mu: float) -> float:
            vals = rl_functions(frontier, delta, mu)
            return vals[num_idx] - vals[den_idx]

        lo, hi = 1.0, float(L - 2)
        if hi <= lo:
            return None
        glo, ghi = gap(lo), gap(hi)
        if glo == 0:
            return lo
        if glo * ghi > 0:
            return None
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            gm = gap(mid)
            if gm == 0 or hi - lo < 1e-12:
                return mid
            if (gm > 0) == (glo > 0):
                lo, glo = mid, gm
            else:
                hi = mid
        return 0.5 * (lo + hi)

    return CrossingPoints(cross(0, 2), cross(1, 3), cross(1, 2))


@dataclass(frozen=True)
class StableDivision:
    """Exhaustive-argmax result for the discrete demand game."""

    rule: str
    delta: float
    m_star: int
    m_star_all: tuple[int, ...]
    x_star: float
    radius: float
    binding_term: str
    driving_population: str
    transition_direction: int
    crossing_candidate: Optional[float]
    crossing_agrees: bool
    per_m_binding: tuple[str, ...]
    warnings: tuple[str, ...] = ()


def stable_division(frontier: Frontier, delta: float,
                    rule: str = "unintentional") -> StableDivision:
    """Division maximizing the escape radius over every demand index.

    The per-index radius is the minimum of the neighbor-transition terms (the
    minimum over all alternative demands is attained at a neighbor, by
    monotonicity of the term families).  The argmax is exhaustive; the
    crossing-based candidate is computed as a cross-check and any
    disagreement beyond one grid cell is surfaced as a warning.
    """
    if rule not in ("unintentional", "intentional"):
        raise ConditionError("rule must be 'unintentional' or 'intentional'")
    L = _grid_size(frontier, delta)
    warnings = []
    if L == 3:
        warnings.append("coarsest valid grid (L = 3): results are indicative only")

    radii = []
    bindings = []
    for m in range(1, L):
        terms = _terms_at(frontier, delta, m, L, rule)
        name = min(terms, key=terms.get)
        radii.append(terms[name])
        bindings.append(name)
    hi = max(radii)
    winners = tuple(m for m, r in zip(range(1, L), radii) if r >= hi - 1e-12)
    m_star = winners[0]
    if len(winners) > 1:
        warnings.append(
            f"argmax tie between demands {winners}; x_star uses their midpoint"
        )
        x_star = delta * (sum(winners) / len(winners))
    else:
        x_star = delta * m_star

    cp = crossings(frontier, delta)
    sol = solve_solutions(frontier)
    if rule == "intentional":
        candidate = cp.mu_intentional
    else:
        candidate = (
            cp.mu_star if sol.s_nash > sol.s_egalitarian else cp.mu_double_star
        )
    agrees = candidate is not None and abs(candidate - m_star) <= 1.0 + 1e-9
    if candidate is not None and not agrees:
        warnings.append(
            f"crossing candidate {candidate:.3f} disagrees with exhaustive "
            f"argmax {m_star}"
        )

    binding = bindings[m_star - 1]
    return StableDivision(
        rule=rule,
        delta=delta,
        m_star=m_star,
        m_star_all=winners,
        x_star=x_star,
        radius=radii[m_star - 1],
        binding_term=binding,
        driving_population=_TERM_POPULATION[binding],
        transition_direction=_TERM_DIRECTION[binding],
        crossing_candidate=candidate,
        crossing_agrees=agrees,
        per_m_binding=tuple(bindings),
        warnings=tuple(warnings),
    )


@dataclass(frozen=True)
class SweepRow:
    delta: float
    m_star: int
    x_star: float
    target: float
    error: float
    binding_term: str
    driving_population: str
    warning: str = ""


def convergence_sweep(frontier: Frontier, deltas: Sequence[float],
                      rule: str = "unintentional") -> list[SweepRow]:
    """Stable divisions over a decreasing grid list, with distance to the
    limiting solution (Nash split for the unintentional rule, the
    intentional split otherwise)."""
    sol = solve_solutions(frontier)
    target = sol.s_nash if rule == "unintentional" else sol.s_intentional
    rows = []
    for d in deltas:
        res = stable_division(frontier, d, rule)
        rows.append(
            SweepRow(
                delta=d,
                m_star=res.m_star,
                x_star=res.x_star,
                target=target,
                error=abs(res.x_star - target),
                binding_term=res.binding_term,
                driving_population=res.driving_population,
                warning="; ".join(res.warnings),
            )
        )
    return rows
