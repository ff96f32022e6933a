"""Markovian equilibrium of the two-agent game.

Strategies depend on the current capital stock. Near a stationary point
``k*`` each player's consumption ``G(x, y)`` responds to the current
state ``x`` and the anticipated state ``y``; the first-, second- and
third-order responses follow from differentiating the Euler equations.
Aggregating them yields a quadratic stability polynomial in two scalars
``a`` and ``b`` whose sign pattern partitions the parameter plane into
ten regions. The aggregate savings policy is the fixed point of an
operator ``T h(k) = H(k, h(h(k)))`` on a Lipschitz class of functions
over a small interval around ``k*``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BracketFailure,
    DegenerateClassification,
    DegenerateDenominator,
    InnerNoConvergence,
    InverseDomainError,
    NoConvergence,
    NoEquilibriumInBracket,
    RecGrowthError,
    SingularSystem,
)
from .model import MarginalBundle, ModelSpec, marginal_bundle
from .numerics import GridFunction, bisect, scan_brackets
from .openloop import OpenLoopSteadyState, Trajectory, admissible_bracket, consumption_curves

__all__ = [
    "FirstOrderEffects",
    "EffectDerivatives",
    "MarkovSteadyState",
    "StabilityClass",
    "SyntheticH",
    "PolicyFixedPoint",
    "ComparisonReport",
    "LocalStability",
    "first_order_effects",
    "second_third_order_effects",
    "stationary_strategies",
    "solve_markov",
    "classify_stability",
    "h_partials",
    "lemma3_bounds",
    "operator_T",
    "markov_local_stability",
    "simulate_markov",
    "compare_openloop",
    "g11_for_target_b",
    "OSCILLATORY_G11",
    "OSCILLATORY_EPS_FRACTION",
    "TABLE1_CANONICAL",
]

DEGENERATE_TOL = 1e-12


@dataclass(frozen=True)
class FirstOrderEffects:
    G1_i: float
    G1_j: float
    xi_ij: float
    xi_ji: float
    a: float
    Delta1: float
    system_residual: float


@dataclass(frozen=True)
class EffectDerivatives:
    G1_i: float
    G1_j: float
    xi_ij: float
    xi_ji: float
    nu_ij: float
    nu_ji: float
    G2_i: float
    G2_j: float
    G12_i: float
    G12_j: float
    Delta1: float
    a: float
    b: float
    g11_i: float
    g11_j: float
    fprime: float
    fsecond: float
    g1_residual: float
    g2_residual: float


@dataclass(frozen=True)
class MarkovSteadyState:
    k_star: float
    c_i: float
    c_j: float
    effects: EffectDerivatives
    bundle_i: MarginalBundle
    bundle_j: MarginalBundle
    f: float
    inner_iterations: int
    xi_override: float | None = None

    def residuals(self) -> dict[str, float]:
        e = self.effects
        return {
            "euler_i": abs(self.bundle_i.alpha * e.xi_ji * e.fprime - 1.0),
            "euler_j": abs(self.bundle_j.alpha * e.xi_ij * e.fprime - 1.0),
            "resource": abs(self.f - self.k_star - self.c_i - self.c_j),
        }


@dataclass(frozen=True)
class StabilityClass:
    """Region of the ``(a, b)`` plane and the associated eigenvalues.

    ``lambda1 = -a`` and ``lambda2 = a/(1+b)`` are the roots of
    ``P(l) = psi1 + psi2 l + psi3 l**2``. ``modulus_order`` compares the
    smaller root against the larger one, which is the convention under
    which the region table's eigenvalue and notes columns agree.
    """

    a: float
    b: float
    case_id: int
    lambda1: float
    lambda2: float
    label: str
    modulus_order: str
    group: str
    H1: float
    H2: float
    psi: tuple[float, float, float]
    P_minus1: float
    P_zero: float
    P_one: float
    lambda_v: float

    @property
    def ascending(self) -> tuple[float, float]:
        return tuple(sorted((self.lambda1, self.lambda2)))

    def P(self, lam):
        p1, p2, p3 = self.psi
        return p1 + p2 * lam + p3 * lam * lam

    def as_dict(self) -> dict:
        return {
            "a": self.a, "b": self.b, "case": self.case_id,
            "lambda1": self.lambda1, "lambda2": self.lambda2,
            "eigenvalues_ascending": list(self.ascending),
            "label": self.label, "modulus_order": self.modulus_order,
            "group": self.group, "H1": self.H1, "H2": self.H2,
            "psi": list(self.psi), "lambda_v": self.lambda_v,
            "P": {"-1": self.P_minus1, "0": self.P_zero, "1": self.P_one},
        }


@dataclass(frozen=True)
class SyntheticH:
    """Exactly linear ``H`` built from a chosen pair of eigenvalues."""

    lambda1: float
    lambda2: float
    k_star: float = 1.0

    @property
    def H1(self) -> float:
        return self.lambda1 * self.lambda2 / (self.lambda1 + self.lambda2)

    @property
    def H2(self) -> float:
        return 1.0 / (self.lambda1 + self.lambda2)


@dataclass
class PolicyFixedPoint:
    h: GridFunction
    k_star: float
    iterations: int
    final_sup_change: float
    final_residual: float
    slope_at_kstar: float
    lipschitz: float
    lambda_lip: float
    lambda_lower: float
    lambda_lower_printed: float
    target_slope: float
    relaxation: float
    group: str
    lipschitz_ok: bool
    fixes_kstar: bool
    iterates_decreasing: bool
    lemma3_ok: bool
    m1: float
    m2: float
    history: list[float] = field(default_factory=list)
    mode: str = "model"
    G1: tuple[float, float] = (0.0, 0.0)
    G2: tuple[float, float] = (0.0, 0.0)
    c_star: tuple[float, float] = (0.0, 0.0)


@dataclass(frozen=True)
class LocalStability:
    value: float
    component_i: float
    component_j: float
    s_prime: float
    stable: bool


@dataclass(frozen=True)
class ComparisonReport:
    capital_lower: bool
    xi_ordered: bool
    c_i_rises: bool
    c_j_falls: bool
    k_star: float
    k_bar: float
    c_i_markov: float
    c_j_markov: float
    c_i_openloop: float
    c_j_openloop: float

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def first_order_effects(bi: MarginalBundle, bj: MarginalBundle, fprime: float) -> FirstOrderEffects:
    """Responses of current consumption to the current state.

    Raises
    ------
    SingularSystem
        If the coefficient determinant is numerically zero.
    """
    di, dj, oi, oj = bi.delta, bj.delta, bi.omega, bj.omega
    D1 = oi * oj + di * oj + oi * dj
    if D1 <= 1e-14:
        raise SingularSystem(f"Delta1 = {D1:.3g}")
    G1i = di * oj * fprime / D1
    G1j = oi * dj * fprime / D1
    M = np.array([[di + oi, di], [dj, dj + oj]])
    resid = float(np.max(np.abs(M @ np.array([G1i, G1j]) - np.array([di, dj]) * fprime)))
    s = di / oi + dj / oj
    return FirstOrderEffects(
        G1_i=G1i, G1_j=G1j,
        xi_ij=(1.0 + di / oi) / (1.0 + s),
        xi_ji=(1.0 + dj / oj) / (1.0 + s),
        a=fprime - G1i - G1j, Delta1=D1, system_residual=resid,
    )


def second_third_order_effects(bi: MarginalBundle, bj: MarginalBundle, fprime: float,
                               fsecond: float, g11_i: float = 0.0, g11_j: float = 0.0,
                               first: FirstOrderEffects | None = None) -> EffectDerivatives:
    """Responses to the anticipated state and their interaction.

    ``g11_i`` and ``g11_j`` are the second derivatives of the policies in
    the current state; they are not determined by the stationary
    conditions and enter as inputs.

    Raises
    ------
    DegenerateDenominator
        If ``f' - G1`` vanishes for either player.
    """
    if first is None:
        first = first_order_effects(bi, bj, fprime)
    di, dj, oi, oj = bi.delta, bj.delta, bi.omega, bj.omega
    fp, fpp, D1 = fprime, fsecond, first.Delta1
    G1i, G1j = first.G1_i, first.G1_j
    net_i, net_j = fp - G1j, fp - G1i
    if abs(net_i) < 1e-14 or abs(net_j) < 1e-14:
        raise DegenerateDenominator("f' - G1 vanishes")
    nu_ij = di * (fp - 1.0) + (fpp - g11_j) / net_i
    nu_ji = dj * (fp - 1.0) + (fpp - g11_i) / net_j

    G2i = (di * oi * oj ** 2 + di * dj * (oi * oj - di * oj + oi * dj)) / D1 ** 2 * fp \
        - (di * oj + (dj + oj) * nu_ij - di * nu_ji) / D1
    G2j = (oi ** 2 * dj * oj + di * dj * (oi * oj + di * oj - oi * dj)) / D1 ** 2 * fp \
        - (oi * dj - dj * nu_ij + (di + oi) * nu_ji) / D1

    M = np.array([[di + oi, di], [dj, dj + oj]])
    rhs = np.array([[oi, di], [dj, oj]]) @ np.array([G1i, G1j]) - np.array([di + nu_ij, dj + nu_ji])
    resid = float(np.max(np.abs(M @ np.array([G2i, G2j]) - rhs)))

    G12i = -(dj * G2i + oj * G2j) * (oi * oj + di * oj) / D1 * fp
    G12j = -(oi * G2i + di * G2j) * (oi * oj + oi * dj) / D1 * fp
    return EffectDerivatives(
        G1_i=G1i, G1_j=G1j, xi_ij=first.xi_ij, xi_ji=first.xi_ji,
        nu_ij=nu_ij, nu_ji=nu_ji, G2_i=G2i, G2_j=G2j, G12_i=G12i, G12_j=G12j,
        Delta1=D1, a=first.a, b=G2i + G2j, g11_i=float(g11_i), g11_j=float(g11_j),
        fprime=fp, fsecond=fpp, g1_residual=first.system_residual, g2_residual=resid,
    )


def _start_point(model: ModelSpec, k: float) -> tuple[float, float]:
    floors = [ag.alpha.inverse(0.5 * (ag.alpha.alpha0 + ag.alpha.alpha_bar)) for ag in model.agents]
    try:
        ol = consumption_curves(model, k)
    except InverseDomainError:
        return floors[0], floors[1]
    return max(ol[0], floors[0]), max(ol[1], floors[1])


def stationary_strategies(model: ModelSpec, k: float, *, damping: float = 0.5,
                          tol: float = 1e-12, max_iter: int = 500,
                          xi_override: float | None = None) -> tuple[float, float, int]:
    """Stationary consumptions ``G(k, k)`` from the deflated Euler equations.

    Damped fixed-point iteration on ``c <- alpha^{-1}(1/(xi f'(k)))`` with
    the deflators recomputed at the current consumptions.

    Raises
    ------
    InnerNoConvergence
        If ``max_iter`` steps do not settle to ``tol``.
    InverseDomainError
        If an iterate leaves the domain of an inverse discount factor.
    """
    fp = float(model.technology.d1(k))
    ai, aj = model.agent_i.alpha, model.agent_j.alpha
    if xi_override is not None:
        ci = ai.inverse(1.0 / (xi_override * fp))
        cj = aj.inverse(1.0 / (xi_override * fp))
        return ci, cj, 0
    ci, cj = _start_point(model, k)
    for it in range(1, max_iter + 1):
        bi = marginal_bundle(model.agent_i, ci)
        bj = marginal_bundle(model.agent_j, cj)
        fo = first_order_effects(bi, bj, fp)
        ti = ai.inverse(1.0 / (fo.xi_ji * fp))
        tj = aj.inverse(1.0 / (fo.xi_ij * fp))
        ni = (1.0 - damping) * ci + damping * ti
        nj = (1.0 - damping) * cj + damping * tj
        change = max(abs(ni - ci), abs(nj - cj))
        ci, cj = ni, nj
        if change < tol:
            return ci, cj, it
    raise InnerNoConvergence(f"deflator loop unsettled after {max_iter} steps at k={k:.6g}")


def markov_scan_interval(model: ModelSpec) -> tuple[float, float]:
    """Capital range in which the deflated Euler equations can hold.

    Deflators exceed one half, so ``f'(k) < 2/alpha0``; on the other side
    ``f'(k) > 1/alpha_bar`` as in the open-loop case.
    """
    tech = model.technology
    lo = tech.inverse_d1(2.0 / min(ag.alpha.alpha0 for ag in model.agents))
    _, hi = admissible_bracket(model)
    return lo, hi


def solve_markov(model: ModelSpec, g11_pair: tuple[float, float] = (0.0, 0.0), *,
                 xi_override: float | None = None, n_grid: int = 200,
                 tol: float = 1e-12) -> MarkovSteadyState:
    """Stationary Markov equilibrium.

    The resource gap ``f(k) - k - G_i(k,k) - G_j(k,k)`` is scanned over
    :func:`markov_scan_interval`; points where the inner loop fails are
    skipped, and the first sign change is refined by bisection.

    Raises
    ------
    NoEquilibriumInBracket
        If no sign change is found.
    """
    tech = model.technology
    if xi_override is not None:
        lo, hi = admissible_bracket(model)
    else:
        lo, hi = markov_scan_interval(model)

    def gap(k: float) -> float:
        try:
            ci, cj, _ = stationary_strategies(model, k, xi_override=xi_override)
        except RecGrowthError:
            return math.nan
        return float(tech.value(k)) - k - ci - cj

    brackets = scan_brackets(gap, (lo, hi), n_grid)
    if not brackets:
        raise NoEquilibriumInBracket(f"no Markov steady state on [{lo:.6g}, {hi:.6g}]")
    last_exc = None
    for br in brackets:
        try:
            k = bisect(gap, br, tol).root
            ci, cj, its = stationary_strategies(model, k, xi_override=xi_override)
            break
        except RecGrowthError as exc:
            last_exc = exc
    else:
        raise NoEquilibriumInBracket(f"no bracket refined cleanly: {last_exc}")
    bi = marginal_bundle(model.agent_i, ci)
    bj = marginal_bundle(model.agent_j, cj)
    fp, fpp = float(tech.d1(k)), float(tech.d2(k))
    if xi_override is not None:
        eff = _override_effects(bi, bj, fp, fpp, xi_override)
    else:
        eff = second_third_order_effects(bi, bj, fp, fpp, g11_pair[0], g11_pair[1])
    return MarkovSteadyState(k_star=k, c_i=ci, c_j=cj, effects=eff, bundle_i=bi,
                             bundle_j=bj, f=float(tech.value(k)), inner_iterations=its,
                             xi_override=xi_override)


def _override_effects(bi, bj, fp, fpp, xi) -> EffectDerivatives:
    """Effects consistent with forced deflators: no strategic responses."""
    g1 = (1.0 - xi) * fp
    return EffectDerivatives(
        G1_i=g1, G1_j=g1, xi_ij=xi, xi_ji=xi,
        nu_ij=bi.delta * (fp - 1.0) + fpp / (fp - g1),
        nu_ji=bj.delta * (fp - 1.0) + fpp / (fp - g1),
        G2_i=0.0, G2_j=0.0, G12_i=0.0, G12_j=0.0, Delta1=float("nan"),
        a=fp - 2 * g1, b=0.0, g11_i=0.0, g11_j=0.0, fprime=fp, fsecond=fpp,
        g1_residual=0.0, g2_residual=0.0,
    )


# Region table: case -> (label, modulus order of smaller vs larger root)
_TABLE1 = {
    1: ("stable", "|l1|>|l2|"),
    2: ("saddle", "|l1|>|l2|"),
    3: ("unstable", "|l1|>|l2|"),
    4: ("stable", "|l1|<|l2|"),
    5: ("saddle", "|l1|<|l2|"),
    6: ("unstable", "|l1|<|l2|"),
    7: ("stable", "|l1|>|l2|"),
    8: ("saddle", "|l1|>|l2|"),
    9: ("unstable", "|l1|>|l2|"),
    10: ("saddle", "|l1|>|l2|"),
}

TABLE1_CANONICAL = {
    1: (0.5, 0.5), 2: (1.5, 0.6), 3: (2.0, 0.5), 4: (0.5, -0.25), 5: (0.5, -0.6),
    6: (1.5, -0.5), 7: (0.5, -3.0), 8: (0.5, -1.4), 9: (2.5, -1.4),
}


def _region(a: float, b: float) -> int:
    if b > 0.0:
        if a < 1.0:
            return 1
        return 2 if a - b < 1.0 else 3
    if b > -1.0:
        if a < 1.0:
            return 4 if a - b < 1.0 else 5
        return 6
    if a < 1.0:
        return 7 if a + b < -1.0 else 8
    return 9 if a + b > -1.0 else 10


def _degenerate(a: float, b: float, tol: float) -> str | None:
    checks = (
        ("a = 1", a - 1.0), ("b = 0", b), ("b = -1", b + 1.0),
        ("a - b = 1", a - b - 1.0), ("a + b = -1", a + b + 1.0),
        ("b = -2 (repeated root)", b + 2.0),
    )
    for name, val in checks:
        if abs(val) <= tol:
            return name
    return None


def classify_stability(a: float, b: float, tol: float = DEGENERATE_TOL) -> StabilityClass:
    """Place ``(a, b)`` in its stability region.

    Raises
    ------
    ValueError
        If ``a <= 0``.
    DegenerateClassification
        On any region boundary, within ``tol``.
    """
    a, b = float(a), float(b)
    if not (a > 0.0) or not math.isfinite(a) or not math.isfinite(b):
        raise ValueError("a must be positive and finite")
    hit = _degenerate(a, b, tol)
    if hit:
        raise DegenerateClassification(hit)
    case = _region(a, b)
    l1, l2 = -a, a / (1.0 + b)
    label, order = _TABLE1[case]
    lo, hi = sorted((l1, l2))
    computed = "|l1|>|l2|" if abs(lo) > abs(hi) else "|l1|<|l2|"
    n_stable = (abs(l1) < 1.0) + (abs(l2) < 1.0)
    eig_label = {2: "stable", 1: "saddle", 0: "unstable"}[n_stable]
    if computed != order or eig_label != label:
        raise RecGrowthError(f"region table inconsistent at a={a}, b={b}")
    H1, H2, group = _h(l1, l2)
    psi = (a * a, -a * b, -(1.0 + b))
    P = lambda lam: psi[0] + psi[1] * lam + psi[2] * lam * lam
    return StabilityClass(
        a=a, b=b, case_id=case, lambda1=l1, lambda2=l2, label=label,
        modulus_order=computed, group=group, H1=H1, H2=H2, psi=psi,
        P_minus1=P(-1.0), P_zero=P(0.0), P_one=P(1.0),
        lambda_v=-a * b / (2.0 * (1.0 + b)),
    )


def _h(l1: float, l2: float) -> tuple[float, float, str]:
    s = l1 + l2
    if abs(s) <= DEGENERATE_TOL:
        raise DegenerateClassification("lambda1 + lambda2 = 0")
    H1, H2 = l1 * l2 / s, 1.0 / s
    if H1 > 0 and H2 < 0:
        group = "I"
    elif H1 < 0 and H2 > 0:
        group = "II"
    elif H1 < 0 and H2 < 0:
        group = "III"
    else:
        raise DegenerateClassification("H partials both nonnegative")
    return H1, H2, group


def h_partials(cls: StabilityClass) -> tuple[float, float, str]:
    """Partials of ``H`` at the stationary point and the monotonicity group."""
    return _h(cls.lambda1, cls.lambda2)


def lemma3_bounds(H1: float, H2: float, lam1: float, lam2: float) -> dict:
    """Admissible Lipschitz slopes and the bounds ``m1 < m2`` on the H partials.

    The slope map ``Q(l) = H1 + H2 l**2`` satisfies ``l < Q(l) < 0`` for
    ``l`` between ``-sqrt(|l1 l2|)`` (or ``-1``) and ``l1``.
    """
    prod = abs(lam1 * lam2)
    lower = max(-1.0, -math.sqrt(prod))
    printed = max(-1.0, -prod ** -0.5) if prod > 0 else -1.0
    return {"lambda_lower": lower, "lambda_lower_printed": printed}


def _H_linear(H1, H2, k_star):
    def H(x, z):
        return k_star + H1 * (x - k_star) + H2 * (z - k_star)
    return H


def _H_model(ss: MarkovSteadyState, tech, H1: float, H2: float, eps: float):
    """``H(x, z)`` solving the reduced equilibrium condition in ``y``.

    Strategies are replaced by their first-order expansions around the
    stationary point, so the returned map is smooth and its partials at
    ``(k*, k*)`` are exactly ``H1`` and ``H2``. Evaluation is vectorised:
    every node is bisected simultaneously.
    """
    e = ss.effects
    ks, cs = ss.k_star, ss.c_i + ss.c_j
    G1, G2 = e.G1_i + e.G1_j, e.G2_i + e.G2_j
    A, beta = tech.A, tech.beta

    def psi(x, y, z):
        # f extended by f(0) = 0 below zero keeps psi continuous and negative there
        ynext = A * np.power(x, beta) - cs - G1 * (x - ks) - G2 * (y - ks)
        fy = A * np.power(np.maximum(ynext, 0.0), beta)
        return fy - cs - G1 * (ynext - ks) - G2 * (z - ks) - z

    def H(x, z):
        x = np.asarray(x, dtype=float)
        z = np.asarray(z, dtype=float)
        guess = ks + H1 * (x - ks) + H2 * (z - ks)
        width = np.maximum(0.5 * np.abs(guess - ks), eps)
        lo, hi = guess - width, guess + width
        # orient psi to increase in y near the root, where its slope is -a*b
        sgn = 1.0 if G2 < 0.0 else -1.0
        flo, fhi = sgn * psi(x, lo, z), sgn * psi(x, hi, z)
        for _ in range(30):
            low_bad, high_bad = flo > 0.0, fhi < 0.0
            if not (low_bad.any() or high_bad.any()):
                break
            width = np.where(low_bad | high_bad, 2.0 * width, width)
            lo = np.where(low_bad, guess - width, lo)
            hi = np.where(high_bad, guess + width, hi)
            flo, fhi = sgn * psi(x, lo, z), sgn * psi(x, hi, z)
        if np.any(flo > 0.0) or np.any(fhi < 0.0) or not np.all(np.isfinite(flo * fhi)):
            raise BracketFailure("reduced equilibrium condition has no sign change")
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            fm = sgn * psi(x, mid, z)
            same = fm <= 0.0
            lo = np.where(same, mid, lo)
            flo = np.where(same, fm, flo)
            hi = np.where(same, hi, mid)
            if np.max(hi - lo) <= 4e-16 * ks:
                break
        return np.where(flo == 0.0, lo, 0.5 * (lo + hi))
    return H


def _target_slope(group: str, l1: float, l2: float) -> float:
    if group == "II":
        return l1
    if group == "I":
        return max(l1, l2)
    return l1 if abs(l1) < abs(l2) else l2


def _auto_relaxation(H2: float, tau: float) -> float:
    """Mann weight placing the linearized error modes inside the unit disc.

    Around a fixed point of slope ``tau`` the operator acts on a monomial
    perturbation ``(k-k*)**n`` with factor ``H2 (tau + tau**n)``. The level
    mode ``n = 0`` is excluded: iterates are pinned at ``h(k*) = k*``. When all
    factors already lie in ``(-1, 1)`` the plain iteration is used;
    otherwise the weight equalises the extreme contraction rates.
    """
    factors = [H2 * (tau + tau ** n) for n in range(1, 40)] + [H2 * tau]
    emin, emax = min(factors), max(factors)
    if emax >= 1.0:
        raise NoConvergence("a linearized mode of T is expanding; no relaxation helps")
    if emin > -1.0:
        return 1.0
    return 2.0 / (2.0 - emin - emax)


def operator_T(source: MarkovSteadyState | SyntheticH, *, model: ModelSpec | None = None,
               eps: float | None = None, n_grid: int = 201, lambda_lip: float | None = None,
               tol: float = 1e-10, max_iter: int = 10000, relaxation: float | None = None,
               h0: np.ndarray | None = None) -> PolicyFixedPoint:
    """Fixed point of ``T h(k) = H(k, h(h(k)))`` on ``[k* - eps, k* + eps]``.

    Parameters
    ----------
    source : MarkovSteadyState or SyntheticH
        Stationary point with effect derivatives (``model`` must then be
        given for the technology), or an exactly linear ``H``.
    eps : float, optional
        Half-width of the interval; default ``0.05 k*``.
    n_grid : int
        Number of nodes; odd so that ``k*`` is a node.
    lambda_lip : float, optional
        Lipschitz slope of the function class; default is the midpoint of
        the admissible slopes and the target eigenvalue.
    tol : float
        Stop when ``sup |T h - h| < tol``.
    relaxation : float, optional
        Mann weight ``w`` in ``h <- (1 - w) h + w T h``; chosen from the
        linearized spectrum of ``T`` when omitted.

    Raises
    ------
    NoConvergence
        If ``max_iter`` iterations do not reach ``tol``.
    BracketFailure
        If the inner root-solve cannot bracket.
    """
    if n_grid < 3 or n_grid % 2 == 0:
        raise ValueError("n_grid must be odd and at least 3")
    if isinstance(source, SyntheticH):
        mode = "synthetic"
        ks, l1, l2 = source.k_star, source.lambda1, source.lambda2
        H1, H2, group = _h(l1, l2)
        H = _H_linear(H1, H2, ks)
        G1 = G2 = cstar = (0.0, 0.0)
    else:
        if model is None:
            raise ValueError("model mode needs the model for its technology")
        mode = "model"
        e = source.effects
        cls = classify_stability(e.a, e.b)
        ks, l1, l2 = source.k_star, cls.lambda1, cls.lambda2
        H1, H2, group = cls.H1, cls.H2, cls.group
        G1, G2, cstar = (e.G1_i, e.G1_j), (e.G2_i, e.G2_j), (source.c_i, source.c_j)
    if eps is None:
        eps = 0.05 * ks
    tau = _target_slope(group, l1, l2)
    if not -1.0 < tau < 1.0:
        raise NoConvergence(f"target slope {tau:.6g} lies outside (-1, 1)")
    bounds = lemma3_bounds(H1, H2, l1, l2)
    lower = bounds["lambda_lower"] if group == "II" else math.copysign(1.0, tau)
    if lambda_lip is None:
        lambda_lip = 0.5 * (lower + tau)
    if mode == "model":
        H = _H_model(source, model.technology, H1, H2, eps)
    w = _auto_relaxation(H2, tau) if relaxation is None else float(relaxation)
    if not 0.0 < w <= 1.0:
        raise ValueError("relaxation must lie in (0, 1]")

    lo, hi = ks - eps, ks + eps
    nodes = np.linspace(lo, hi, n_grid)
    mid = n_grid // 2
    nodes[mid] = ks
    vals = np.full(n_grid, ks) if h0 is None else np.array(h0, dtype=float)
    h = GridFunction(lo, hi, vals)
    fixes, decreasing = True, True
    history: list[float] = []
    for it in range(1, max_iter + 1):
        Th = np.asarray(H(nodes, h.compose_self(nodes)), dtype=float)
        if abs(Th[mid] - ks) > 1e-9:
            fixes = False
        # the class requires h(k*) = k*; pinning removes roundoff in the level mode
        Th[mid] = ks
        resid = float(np.max(np.abs(Th - h.values)))
        new = (1.0 - w) * h.values + w * Th
        change = float(np.max(np.abs(new - h.values)))
        in_class = (np.all(np.diff(h.values) <= 0.0) and h.lipschitz_constant() <= abs(lambda_lip)
                    and h.values.min() >= lo and h.values.max() <= hi)
        if group == "II" and in_class and np.any(np.diff(Th) > 1e-12 * ks):
            decreasing = False
        history.append(resid)
        h = GridFunction(lo, hi, new)
        if resid < tol:
            break
    else:
        raise NoConvergence(f"operator T unsettled after {max_iter} iterations (residual {resid:.3g})")

    lip = h.lipschitz_constant()
    Q = lambda lam: H1 + H2 * lam * lam
    margin = -Q(lambda_lip)
    m1 = H1 + 0.25 * margin
    m2 = H2 + 0.25 * margin / (lambda_lip * lambda_lip)
    lemma_ok = False
    if group == "II":
        probe = np.linspace(lower, l1, 202)[1:-1]
        lemma_ok = bool(lower < lambda_lip < l1 and np.all(probe < Q(probe)) and np.all(Q(probe) < 0.0)
                        and H1 < m1 < 0.0 < H2 < m2 and lambda_lip < Q(lambda_lip) < m1 + m2 * lambda_lip ** 2 < 0.0)
    return PolicyFixedPoint(
        h=h, k_star=ks, iterations=it, final_sup_change=change, final_residual=resid,
        slope_at_kstar=h.slope_at(ks), lipschitz=lip, lambda_lip=float(lambda_lip),
        lambda_lower=bounds["lambda_lower"], lambda_lower_printed=bounds["lambda_lower_printed"],
        target_slope=tau, relaxation=w, group=group,
        lipschitz_ok=lip <= abs(lambda_lip) + 1e-6, fixes_kstar=fixes,
        iterates_decreasing=decreasing, lemma3_ok=lemma_ok, m1=m1, m2=m2,
        history=history, mode=mode, G1=G1, G2=G2, c_star=cstar,
    )


def markov_local_stability(ss: MarkovSteadyState) -> LocalStability:
    """Local stability expression of the Markov steady state.

    ``value < 0`` is the stability condition when the aggregate saving
    function is increasing at ``k*``; ``s_prime = a - b`` is its slope.
    """
    e = ss.effects
    di, dj = ss.bundle_i.delta, ss.bundle_j.delta
    fp, fpp = e.fprime, e.fsecond
    term_i = (fpp - e.g11_i - e.G12_i) / (fp - e.G1_i)
    term_j = (fpp - e.g11_j - e.G12_j) / (fp - e.G1_j)
    value = di * dj * (fp - 1.0) + di * term_i + dj * term_j
    comp_i = di * (e.G1_i + e.G2_i) + (fpp - e.g11_j - e.G12_j) / (fp - e.G1_j)
    comp_j = dj * (e.G1_j + e.G2_j) + (fpp - e.g11_i - e.G12_i) / (fp - e.G1_i)
    s_prime = fp - (e.G1_i + e.G1_j) - (e.G2_i + e.G2_j)
    return LocalStability(value=value, component_i=comp_i, component_j=comp_j,
                          s_prime=s_prime, stable=abs(s_prime) < 1.0)


def simulate_markov(fp: PolicyFixedPoint, k0: float, T: int = 200,
                    tail: int = 50) -> tuple[Trajectory, bool]:
    """Iterate the policy from ``k0``; returns the path and an oscillation flag.

    Consumption at ``t`` is the linearized strategy evaluated at
    ``(k_t, k_{t+1})``.
    """
    if T < 1:
        raise ValueError("T must be at least 1")
    h, ks = fp.h, fp.k_star
    if not h.lo - 1e-12 <= k0 <= h.hi + 1e-12:
        raise ValueError("k0 must lie in the policy interval")
    k = np.empty(T + 1)
    k[0] = k0
    for t in range(T):
        k[t + 1] = h(k[t])
    dev = k - ks
    nxt = np.append(k[1:], h(k[-1]))
    ci = fp.c_star[0] + fp.G1[0] * dev + fp.G2[0] * (nxt - ks)
    cj = fp.c_star[1] + fp.G1[1] * dev + fp.G2[1] * (nxt - ks)
    traj = Trajectory(t=np.arange(T + 1, dtype=float), k=k, c_i=ci, c_j=cj, k_ref=ks,
                      label=f"markov-{fp.mode}", dev=dev)
    flag = k0 != ks and traj.alternating(tail=min(tail, T + 1))
    return traj, bool(flag)


def compare_openloop(mss: MarkovSteadyState, ols: OpenLoopSteadyState) -> ComparisonReport:
    """Markov steady state against the open-loop one on the same model."""
    e = mss.effects
    return ComparisonReport(
        capital_lower=mss.k_star < ols.k, xi_ordered=e.xi_ij < e.xi_ji,
        c_i_rises=mss.c_i >= ols.c_i, c_j_falls=mss.c_j <= ols.c_j,
        k_star=mss.k_star, k_bar=ols.k, c_i_markov=mss.c_i, c_j_markov=mss.c_j,
        c_i_openloop=ols.c_i, c_j_openloop=ols.c_j,
    )


def g11_for_target_b(model: ModelSpec, target_b: float) -> float:
    """Common policy curvature ``g11`` giving ``b = target_b`` at the steady state.

    ``b`` is affine in ``g11`` (the steady state does not depend on it), so two
    evaluations determine it.
    """
    ss = solve_markov(model)
    b0 = ss.effects.b
    b1 = second_third_order_effects(ss.bundle_i, ss.bundle_j, ss.effects.fprime,
                                    ss.effects.fsecond, 1.0, 1.0).b
    return (target_b - b0) / (b1 - b0)


# Curvature placing the oscillatory model in case 4; see g11_for_target_b.
OSCILLATORY_G11 = -5.651965
# Interval half-width, as a fraction of k*, keeping that fixed point inside its class.
OSCILLATORY_EPS_FRACTION = 0.0005
