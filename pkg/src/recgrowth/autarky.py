"""Single-agent benchmark economy.

An agent alone with technology ``f`` accumulates toward a steady state
where ``alpha(f(k) - k) f'(k) = 1``. This module finds those states,
classifies their stability, computes the value function by successive
approximation and derives the upper bound on admissible strategies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NoConvergence, NoCrossing, NoEquilibrium
from .model import Agent, MarginalBundle, ModelSpec, TechnologyFamily, marginal_bundle
from .numerics import Bracket, bisect, scan_brackets

__all__ = [
    "AutarkyEquilibrium",
    "StabilityDiag",
    "ValueTable",
    "OrderingReport",
    "stationarity_gap",
    "solve_autarky",
    "autarky_stability",
    "stability_sides",
    "value_iterate",
    "bellman_step",
    "strategy_bound",
    "lemma1_check",
]

_GOLDEN = 0.5 * (math.sqrt(5.0) - 1.0)


@dataclass(frozen=True)
class AutarkyEquilibrium:
    k_a: float
    c_a: float
    eta: float
    stable: bool
    bundle: MarginalBundle

    def residual(self, agent: Agent, tech: TechnologyFamily) -> float:
        return abs(float(agent.alpha.value(self.c_a)) * float(tech.d1(self.k_a)) - 1.0)


@dataclass(frozen=True)
class StabilityDiag:
    """Stability scalar and the slope comparison that must agree with it.

    ``abs_fsecond`` and ``abs_inv_alpha_slope`` are the two slopes whose
    comparison decides stability: ``eta < 0`` iff the first exceeds the
    second. The latter is normalised as in :func:`stability_sides`.
    """

    eta: float
    stable: bool
    abs_fsecond: float
    abs_inv_alpha_slope: float
    slope_criterion: bool
    agree: bool


@dataclass
class ValueTable:
    grid: np.ndarray
    v: np.ndarray
    policy: np.ndarray
    residual: float
    iterations: int
    monotone: bool = True
    history: list[float] = field(default_factory=list)

    def value_at(self, k):
        return np.interp(k, self.grid, self.v)

    def policy_at(self, k):
        return np.interp(k, self.grid, self.policy)


@dataclass(frozen=True)
class OrderingReport:
    k_a_i: float
    k_a_j: float
    c_a_i: float
    c_a_j: float
    capital_ordered: bool
    consumption_ordered: bool

    @property
    def ok(self) -> bool:
        return self.capital_ordered and self.consumption_ordered


def stationarity_gap(agent: Agent, tech: TechnologyFamily, k: float) -> float:
    """``alpha(f(k) - k) f'(k) - 1``; zero at an autarky steady state."""
    c = float(tech.value(k)) - k
    return float(agent.alpha.value(c)) * float(tech.d1(k)) - 1.0


def _eta(bundle: MarginalBundle, tech: TechnologyFamily, k: float) -> float:
    fp = float(tech.d1(k))
    return bundle.delta * (fp - 1.0) + float(tech.d2(k)) / fp


def solve_autarky(agent: Agent, tech: TechnologyFamily, n_grid: int = 1000,
                  tol: float = 1e-12) -> list[AutarkyEquilibrium]:
    """All autarky steady states on ``(1e-6 k_max, k_max)``, ascending.

    Raises
    ------
    NoEquilibrium
        If the scan finds no sign change.
    """
    km = tech.k_max
    gap = lambda k: stationarity_gap(agent, tech, k)
    brackets = scan_brackets(gap, (1e-6 * km, km), n_grid)
    if not brackets:
        raise NoEquilibrium("no autarky steady state on the capital interval")
    out = []
    for br in brackets:
        k = bisect(gap, br, tol).root
        c = float(tech.value(k)) - k
        b = marginal_bundle(agent, c)
        eta = _eta(b, tech, k)
        out.append(AutarkyEquilibrium(k_a=k, c_a=c, eta=eta, stable=eta < 0.0, bundle=b))
    return out


def stability_sides(agent: Agent, tech: TechnologyFamily, k: float) -> tuple[float, float, float]:
    """Stability scalar and the two slopes compared by the geometric test.

    Returns ``(eta, |f''(k)|, s)`` where ``s = -(d/dk 1/alpha(f(k)-k)) * alpha f'(k)``
    is the slope of the ``1/alpha`` curve, sign-flipped and scaled by
    ``alpha f'``. The scale is one at a steady state and makes
    ``eta < 0`` equivalent to ``|f''| > s`` at any ``k``; ``s`` is
    negative where ``f' < 1``.
    """
    c = float(tech.value(k)) - k
    al, alp = float(agent.alpha.value(c)), float(agent.alpha.d1(c))
    fp, fpp = float(tech.d1(k)), float(tech.d2(k))
    eta = alp / al * (fp - 1.0) + fpp / fp
    inv_slope = -alp * (fp - 1.0) / al ** 2
    return eta, abs(fpp), -inv_slope * al * fp


def autarky_stability(eq: AutarkyEquilibrium, agent: Agent, tech: TechnologyFamily) -> StabilityDiag:
    """Check that ``eta < 0`` and the slope comparison agree."""
    eta, lhs, rhs = stability_sides(agent, tech, eq.k_a)
    crit = lhs > rhs
    return StabilityDiag(eta=eta, stable=eta < 0.0, abs_fsecond=lhs,
                         abs_inv_alpha_slope=rhs, slope_criterion=crit,
                         agree=(eta < 0.0) == crit)


def _objective(agent: Agent, grid, v, c, kk):
    """``u(c) + alpha(c) v(kk)`` with linear interpolation of ``v``."""
    return agent.u.value(c) + agent.alpha.value(c) * np.interp(kk, grid, v)


def bellman_step(agent: Agent, tech: TechnologyFamily, grid: np.ndarray, v: np.ndarray,
                 n_search: int = 500, prev_policy: np.ndarray | None = None,
                 golden_iters: int = 40) -> tuple[np.ndarray, np.ndarray]:
    """One application of the Bellman operator on a capital grid.

    The maximisation over ``c in [0, f(k)]`` uses a uniform search grid
    followed by one golden-section refinement around the best node. The
    previous policy, when given, is kept as a candidate so that the step
    is monotone in ``v``.
    """
    y = tech.value(grid)
    s = np.linspace(0.0, 1.0, n_search)
    C = y[:, None] * s[None, :]
    vals = _objective(agent, grid, v, C, y[:, None] - C)
    best = np.argmax(vals, axis=1)
    rows = np.arange(grid.size)
    c_best = C[rows, best]
    v_best = vals[rows, best]

    ds = 1.0 / (n_search - 1)
    lo = np.clip(s[best] - ds, 0.0, 1.0) * y
    hi = np.clip(s[best] + ds, 0.0, 1.0) * y
    x1 = hi - _GOLDEN * (hi - lo)
    x2 = lo + _GOLDEN * (hi - lo)
    f1 = _objective(agent, grid, v, x1, y - x1)
    f2 = _objective(agent, grid, v, x2, y - x2)
    for _ in range(golden_iters):
        move = f1 < f2
        lo = np.where(move, x1, lo)
        hi = np.where(move, hi, x2)
        x1n = np.where(move, x2, hi - _GOLDEN * (hi - lo))
        x2n = np.where(move, lo + _GOLDEN * (hi - lo), x1)
        f1n = np.where(move, f2, np.nan)
        f2n = np.where(move, np.nan, f1)
        need1, need2 = ~move, move
        f1n[need1] = _objective(agent, grid, v, x1n[need1], y[need1] - x1n[need1])
        f2n[need2] = _objective(agent, grid, v, x2n[need2], y[need2] - x2n[need2])
        x1, x2, f1, f2 = x1n, x2n, f1n, f2n
    cg = 0.5 * (lo + hi)
    vg = _objective(agent, grid, v, cg, y - cg)
    better = vg > v_best
    c_best = np.where(better, cg, c_best)
    v_best = np.where(better, vg, v_best)
    if prev_policy is not None:
        cp = np.minimum(prev_policy, y)
        vp = _objective(agent, grid, v, cp, y - cp)
        better = vp > v_best
        c_best = np.where(better, cp, c_best)
        v_best = np.where(better, vp, v_best)
    return v_best, c_best


def value_iterate(agent: Agent, tech: TechnologyFamily, n_grid: int = 500, tol: float = 1e-9,
                  n_search: int = 500) -> ValueTable:
    """Successive approximation of the autarky value function from ``v = 0``.

    Returns
    -------
    ValueTable
        Values and the maximising consumption on ``n_grid`` nodes of
        ``[0, k_max]``; ``monotone`` records whether every iterate
        dominated its predecessor node by node.

    Raises
    ------
    NoConvergence
        After ``ceil(log(tol)/log(alpha_bar)) + 100`` sweeps.
    """
    if n_grid < 100:
        raise ValueError("n_grid must be at least 100")
    if not tol > 0.0:
        raise ValueError("tol must be positive")
    grid = np.linspace(0.0, tech.k_max, n_grid)
    v = np.zeros(n_grid)
    policy = None
    max_iter = math.ceil(math.log(tol) / math.log(agent.alpha.alpha_bar)) + 100
    monotone = True
    history = []
    for it in range(1, max_iter + 1):
        v_new, policy = bellman_step(agent, tech, grid, v, n_search, policy)
        diff = v_new - v
        change = float(np.max(np.abs(diff)))
        if np.any(diff < -1e-13 * np.maximum(1.0, np.abs(v))):
            monotone = False
        history.append(change)
        v = v_new
        if change < tol:
            return ValueTable(grid, v, policy, change, it, monotone, history)
    raise NoConvergence(f"value iteration exceeded {max_iter} sweeps")


def _envelope_slope(agent: Agent, tech: TechnologyFamily, vt: ValueTable, k, printed: bool = False):
    """Derivative of the value function from the envelope condition.

    ``printed=True`` evaluates the marginal product at next period's
    capital instead of the current one (comparison mode only).
    """
    k = np.asarray(k, dtype=float)
    c = vt.policy_at(k)
    nxt = np.maximum(tech.value(k) - c, 0.0)
    marg = agent.u.d1(c) + agent.alpha.d1(c) * vt.value_at(nxt)
    fp = tech.d1(nxt) if printed else tech.d1(k)
    return marg * fp


def strategy_bound(agent: Agent, tech: TechnologyFamily, vt: ValueTable, k: float,
                   resource_shift: float = 0.0, printed_envelope: bool = False,
                   tol: float = 1e-12) -> float:
    """Consumption where the marginal benefit of eating equals that of saving.

    Solves ``u'(d) + alpha'(d) v(y - d) = alpha(d) v'(y - d)`` on ``(0, y)``
    with ``y = f(k) - resource_shift``.

    Raises
    ------
    NoCrossing
        If the two sides do not change order on the interval.
    """
    if not 0.0 < k <= tech.k_max * (1 + 1e-12):
        raise ValueError("k must lie in (0, k_max]")
    y = float(tech.value(k)) - resource_shift
    if y <= 0.0:
        raise NoCrossing("no resources left after the shift")

    def gap(d: float) -> float:
        nxt = y - d
        lhs = float(agent.u.d1(d) + agent.alpha.d1(d) * vt.value_at(nxt))
        rhs = float(agent.alpha.value(d) * _envelope_slope(agent, tech, vt, nxt, printed_envelope))
        return lhs - rhs

    lo, hi = 1e-9 * y, y * (1.0 - 1e-9)
    try:
        br = Bracket.from_function(gap, lo, hi)
    except Exception as exc:
        raise NoCrossing(f"marginal curves do not cross on (0, {y:.6g})") from exc
    return bisect(gap, br, tol * max(1.0, y)).root


def lemma1_check(model: ModelSpec) -> OrderingReport:
    """Ordering of the two autarky steady states under dominance."""
    ei = solve_autarky(model.agent_i, model.technology)[0]
    ej = solve_autarky(model.agent_j, model.technology)[0]
    return OrderingReport(
        k_a_i=ei.k_a, k_a_j=ej.k_a, c_a_i=ei.c_a, c_a_j=ej.c_a,
        capital_ordered=0.0 < ej.k_a <= ei.k_a,
        consumption_ordered=0.0 < ej.c_a <= ei.c_a,
    )
