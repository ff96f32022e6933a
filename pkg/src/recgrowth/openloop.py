"""Open-loop (precommitment) equilibrium of the two-agent game.

At a stationary point each agent's Euler equation reads
``alpha(c) f'(k) = 1``, so consumptions follow from the inverse discount
factor and the capital stock solves the resource constraint
``f(k) - k = c_i(k) + c_j(k)``.  Around that point the equilibrium map of
``(c_i, c_j, k)`` is linearized; its Jacobian has one stable root and the
stable eigendirection gives the policy slopes.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .autarky import solve_autarky
from .errors import (
    ComplexRootsPresent,
    DegenerateDenominator,
    InverseDomainError,
    NoEquilibriumInBracket,
    SingularSystem,
)
from .model import MarginalBundle, ModelSpec, marginal_bundle
from .numerics import CubicRoots, bisect, companion_roots, scan_brackets, solve_cubic

__all__ = [
    "OpenLoopSteadyState",
    "OLDerivatives",
    "RegularityReport",
    "MRSReport",
    "Spectrum",
    "ManifoldSlopes",
    "Trajectory",
    "Proposition1Report",
    "admissible_bracket",
    "consumption_curves",
    "solve_openloop",
    "ol_coefficients",
    "regularity_checks",
    "mrs_partials",
    "ol_jacobian_spectrum",
    "inverse_iteration",
    "manifold_slopes",
    "simulate_openloop",
    "compare_autarky",
    "ol_local_stability",
]


@dataclass(frozen=True)
class OpenLoopSteadyState:
    c_i: float
    c_j: float
    k: float
    bundle_i: MarginalBundle
    bundle_j: MarginalBundle
    eta_i: float
    eta_j: float
    fprime: float
    fsecond: float
    f: float

    def residuals(self) -> dict[str, float]:
        return {
            "euler_i": abs(self.bundle_i.alpha * self.fprime - 1.0),
            "euler_j": abs(self.bundle_j.alpha * self.fprime - 1.0),
            "resource": abs(self.f - self.k - self.c_i - self.c_j),
        }


@dataclass(frozen=True)
class OLDerivatives:
    Delta0: float
    F1_i: float
    F2_i: float
    F3_i: float
    F1_j: float
    F2_j: float
    F3_j: float
    cross_i: float
    cross_j: float
    lr_term_i: float
    cmi_term_i: float
    lr_term_j: float
    cmi_term_j: float
    system_residual: float


@dataclass
class RegularityReport:
    lr: bool
    lr_worst: float
    nucmi: bool
    nucmi_worst: float
    p1: bool
    p2: bool
    p3: bool
    p3_value: float
    delta_ordered_at_steady_state: bool

    @property
    def all_hold(self) -> bool:
        return self.p1 and self.p2 and self.p3


@dataclass(frozen=True)
class MRSReport:
    d_cit: float
    d_cit1: float
    d_cjt: float
    d_cjt1: float
    d_kt: float
    d_kt1: float
    mu_bar: float

    @property
    def cross_sum(self) -> float:
        return self.d_cjt + self.d_cjt1

    @property
    def own_sum(self) -> float:
        return self.d_cit + self.d_cit1


@dataclass
class Spectrum:
    """Characteristic data of the open-loop Jacobian."""

    A: np.ndarray
    trace: float
    quad_coeff: float
    det: float
    trace_closed: float
    quad_closed: float
    det_closed: float
    roots: CubicRoots
    oracle_roots: np.ndarray
    ordering_ok: bool
    hyperbolic: bool
    p_minus1: float
    p_zero: float
    p_one: float
    lemma_b1: bool
    lemma_b2: bool
    r1: float
    r2: float
    r3: float
    lemma_b3: bool

    def p(self, lam):
        return ((lam - self.trace) * lam + self.quad_coeff) * lam - self.det


@dataclass(frozen=True)
class ManifoldSlopes:
    pi_i: float
    pi_j: float
    E_ij: float
    E_ji: float
    b_matrix: np.ndarray
    w_per_k: float
    eigvec: np.ndarray
    direction_error: float
    method: str = "closed-form"


@dataclass
class Trajectory:
    t: np.ndarray
    k: np.ndarray
    c_i: np.ndarray
    c_j: np.ndarray
    k_ref: float
    label: str
    warnings: list[str] = field(default_factory=list)
    unstable_residual: float = 0.0
    dev: np.ndarray | None = None

    @property
    def dev_k(self) -> np.ndarray:
        """Capital deviation; kept separately so it survives below ``eps * k_ref``."""
        if self.dev is not None:
            return self.dev
        return self.k - self.k_ref

    def rate(self, skip: int = 1) -> float:
        """Geometric rate of ``|dev_k|`` by log-linear regression."""
        d = np.abs(self.dev_k[skip:])
        t = self.t[skip:]
        keep = d > 1e-300
        slope = np.polyfit(t[keep], np.log(d[keep]), 1)[0]
        return float(math.exp(slope))

    def sign_monotone(self) -> bool:
        s = np.sign(self.dev_k)
        s = s[s != 0]
        return bool(s.size == 0 or np.all(s == s[0]))

    def alternating(self, tail: int | None = None) -> bool:
        s = np.sign(self.dev_k)
        if tail is not None:
            s = s[-tail:]
        s = s[s != 0]
        return bool(s.size >= 2 and np.all(s[1:] != s[:-1]))


@dataclass(frozen=True)
class Proposition1Report:
    consumption_ordered: bool
    capital_chain: bool
    below_autarky_consumption: bool
    main_text_direction: bool
    k_bar: float
    k_a_i: float
    k_a_j: float
    c_a_i: float
    c_a_j: float

    @property
    def ok(self) -> bool:
        return self.consumption_ordered and self.capital_chain and self.below_autarky_consumption


def admissible_bracket(model: ModelSpec, eps: float = 1e-9) -> tuple[float, float]:
    """Capital interval on which both inverse discount factors are defined.

    ``1/f'(k)`` must lie in ``[alpha0, alpha_bar)`` for both agents.
    """
    tech = model.technology
    lo = max(tech.inverse_d1(1.0 / ag.alpha.alpha0) for ag in model.agents)
    hi = min(tech.inverse_d1(1.0 / ag.alpha.alpha_bar) for ag in model.agents)
    return lo + eps, hi - eps


def consumption_curves(model: ModelSpec, k: float) -> tuple[float, float]:
    """Stationary open-loop consumptions ``alpha^{-1}(1/f'(k))``."""
    v = 1.0 / float(model.technology.d1(k))
    return model.agent_i.alpha.inverse(v), model.agent_j.alpha.inverse(v)


def _phi(model: ModelSpec, k: float) -> float:
    ci, cj = consumption_curves(model, k)
    return float(model.technology.value(k)) - k - ci - cj


def solve_openloop(model: ModelSpec, tol: float = 1e-12, n_grid: int = 1000) -> OpenLoopSteadyState:
    """Stationary open-loop equilibrium.

    Raises
    ------
    NoEquilibriumInBracket
        If the resource gap does not change sign on the admissible bracket.
    """
    lo, hi = admissible_bracket(model)
    if not lo < hi:
        raise NoEquilibriumInBracket("empty admissible bracket")
    fn = lambda k: _phi(model, k)
    brackets = scan_brackets(fn, (lo, hi), n_grid)
    if not brackets:
        raise NoEquilibriumInBracket(f"no sign change on [{lo:.6g}, {hi:.6g}]")
    k = bisect(fn, brackets[0], tol).root
    return steady_state_at(model, k)


def steady_state_at(model: ModelSpec, k: float) -> OpenLoopSteadyState:
    tech = model.technology
    ci, cj = consumption_curves(model, k)
    bi = marginal_bundle(model.agent_i, ci)
    bj = marginal_bundle(model.agent_j, cj)
    fp, fpp = float(tech.d1(k)), float(tech.d2(k))
    return OpenLoopSteadyState(
        c_i=ci, c_j=cj, k=k, bundle_i=bi, bundle_j=bj,
        eta_i=bi.delta * (fp - 1.0) + fpp / fp,
        eta_j=bj.delta * (fp - 1.0) + fpp / fp,
        fprime=fp, fsecond=fpp, f=float(tech.value(k)),
    )


def ol_coefficients(ss: OpenLoopSteadyState) -> OLDerivatives:
    """Partials of the policy maps at the stationary point.

    Raises
    ------
    SingularSystem
        If ``omega_i omega_j - delta_i delta_j`` is numerically zero.
    """
    di, dj = ss.bundle_i.delta, ss.bundle_j.delta
    oi, oj = ss.bundle_i.omega, ss.bundle_j.omega
    ei, ej, fp = ss.eta_i, ss.eta_j, ss.fprime
    D0 = oi * oj - di * dj
    if D0 <= 1e-14:
        raise SingularSystem(f"Delta0 = {D0:.3g}")
    xi_ = ei * oj - di * ej
    xj_ = oi * ej - ei * dj
    F1i = (oi * oj - xi_) / D0
    F1j = (oi * oj - xj_) / D0
    F2i = -(di * oj + xi_) / D0
    F2j = -(oi * dj + xj_) / D0
    F3i = xi_ * fp / D0
    F3j = xj_ * fp / D0

    M = np.array([[oi, di], [dj, oj]])
    X = np.array([[F1i, F2i, F3i], [F2j, F1j, F3j]])
    rhs = np.array([[oi - ei, -ei, ei * fp], [-ej, oj - ej, ej * fp]])
    resid = float(np.max(np.abs(M @ X - rhs)))

    ratio = ss.fsecond / fp
    mwu_i = -ss.bundle_i.W / ss.bundle_i.U
    mwu_j = -ss.bundle_j.W / ss.bundle_j.U
    return OLDerivatives(
        Delta0=D0, F1_i=F1i, F2_i=F2i, F3_i=F3i, F1_j=F1j, F2_j=F2j, F3_j=F3j,
        cross_i=xi_, cross_j=xj_,
        lr_term_i=ei * mwu_j, cmi_term_i=(dj - di) * ratio,
        lr_term_j=ej * mwu_i, cmi_term_j=(di - dj) * ratio,
        system_residual=resid,
    )


def regularity_checks(ss: OpenLoopSteadyState, model: ModelSpec,
                      rect: tuple[tuple[float, float], ...] | None = None,
                      n_rect: int = 20, n_nucmi: int = 1000) -> RegularityReport:
    """Local regularity, cross-marginal impatience and the real-root condition.

    Parameters
    ----------
    rect : ((ci_lo, ci_hi), (cj_lo, cj_hi), (k_lo, k_hi)), optional
        Box around the steady state; defaults to +-5% in every coordinate.
    """
    if rect is None:
        rect = tuple((0.95 * x, 1.05 * x) for x in (ss.c_i, ss.c_j, ss.k))
    tech = model.technology
    ks = np.linspace(*rect[2], n_rect)
    fp, fpp = tech.d1(ks), tech.d2(ks)
    worst = -math.inf
    for ag, crange in ((model.agent_i, rect[0]), (model.agent_j, rect[1])):
        cs = np.linspace(*crange, n_rect)
        delta = ag.alpha.d1(cs) / ag.alpha.value(cs)
        # the inequality does not involve the rival's consumption, so the
        # third grid axis only replicates these values
        vals = delta[:, None] * (fp[None, :] - 1.0) + (fpp / fp)[None, :]
        worst = max(worst, float(vals.max()))

    cs = np.linspace(0.0, tech.k_max, n_nucmi)
    ai, aj = model.agent_i.alpha, model.agent_j.alpha
    gap = ai.d1(cs) / ai.value(cs) ** 2 - aj.d1(cs) / aj.value(cs) ** 2
    nuc_worst = float(gap.max())

    di, dj = ss.bundle_i.delta, ss.bundle_j.delta
    oi, oj = ss.bundle_i.omega, ss.bundle_j.omega
    p3 = ss.fprime - (2 * oi * oj + (di - oi) * ss.eta_j + ss.eta_i * (dj - oj))
    return RegularityReport(
        lr=worst < 0.0, lr_worst=worst,
        nucmi=nuc_worst <= 0.0, nucmi_worst=nuc_worst,
        p1=ss.eta_i < 0.0 and ss.eta_j < 0.0,
        p2=nuc_worst <= 0.0,
        p3=p3 >= 0.0, p3_value=p3,
        delta_ordered_at_steady_state=di <= dj,
    )


def mrs_partials(ss: OpenLoopSteadyState) -> MRSReport:
    """Partials of agent ``i``'s intertemporal substitution rate."""
    b = ss.bundle_i
    al, alp = b.alpha, b.alpha_p
    curv = b.W / (al * b.U)
    own = alp / al ** 2
    return MRSReport(
        d_cit=-(2.0 * own - curv),
        d_cit1=own - curv,
        d_cjt=-own,
        d_cjt1=own,
        d_kt=alp / al ** 3,
        d_kt1=-alp / al ** 3,
        mu_bar=1.0 / al,
    )


def jacobian(der: OLDerivatives, fprime: float) -> np.ndarray:
    return np.array([
        [der.F1_i, der.F2_i, der.F3_i],
        [der.F2_j, der.F1_j, der.F3_j],
        [-1.0, -1.0, fprime],
    ])


def ol_jacobian_spectrum(ss: OpenLoopSteadyState, der: OLDerivatives,
                         strict: bool = False) -> Spectrum:
    """Eigen-structure of the linearized open-loop map.

    Coefficients are computed both from closed forms in the model scalars
    and from the matrix entries. With ``strict=True`` a complex pair
    raises :class:`ComplexRootsPresent`.
    """
    A = jacobian(der, ss.fprime)
    di, dj = ss.bundle_i.delta, ss.bundle_j.delta
    oi, oj = ss.bundle_i.omega, ss.bundle_j.omega
    ei, ej, fp, D0 = ss.eta_i, ss.eta_j, ss.fprime, der.Delta0

    tr = float(np.trace(A))
    tr2 = float(np.trace(A @ A))
    quad = 0.5 * (tr * tr - tr2)
    det = float(np.linalg.det(A))
    tr_c = (2 * oi * oj - der.cross_i - der.cross_j) / D0 + fp
    quad_c = (oi * oj - ei * oj - oi * ej) / D0 + 2 * oi * oj * fp / D0
    det_c = oi * oj * fp / D0

    roots = solve_cubic(-tr, quad, -det)
    if strict and not roots.all_real:
        raise ComplexRootsPresent("open-loop Jacobian has a complex pair")
    oracle = companion_roots(-tr, quad, -det)
    r = roots.roots
    ordering = roots.all_real and len(r) == 3 and 0.0 < r[0] < 1.0 < r[1] < r[2]
    if roots.all_real:
        hyper = all(abs(abs(x) - 1.0) > 1e-10 for x in r)
    else:
        hyper = bool(np.all(np.abs(np.abs(oracle) - 1.0) > 1e-10))

    p = lambda lam: ((lam - tr) * lam + quad) * lam - det
    pm1, p0, p1 = p(-1.0), p(0.0), p(1.0)
    disc = tr2 - tr * tr / 3.0
    r3 = tr / 3.0
    half = 0.5 * math.sqrt(2.0 / 3.0 * disc) if disc > 0 else float("nan")
    r1, r2 = r3 - half, r3 + half
    return Spectrum(
        A=A, trace=tr, quad_coeff=quad, det=det,
        trace_closed=tr_c, quad_closed=quad_c, det_closed=det_c,
        roots=roots, oracle_roots=oracle, ordering_ok=bool(ordering), hyperbolic=bool(hyper),
        p_minus1=pm1, p_zero=p0, p_one=p1,
        lemma_b1=bool(pm1 < p0 < 0.0 < p1),
        lemma_b2=bool(tr / 3.0 > 1.0),
        r1=r1, r2=r2, r3=r3,
        lemma_b3=bool(disc > 0 and r1 < r3 < r2 and r3 > 1.0),
    )


def inverse_iteration(A: np.ndarray, shift: float, iters: int = 50) -> np.ndarray:
    """Right eigenvector of ``A`` for the eigenvalue nearest ``shift``."""
    n = A.shape[0]
    M = A - (shift + 1e-13 * max(1.0, abs(shift))) * np.eye(n)
    x = np.ones(n) / math.sqrt(n)
    for _ in range(iters):
        y = np.linalg.solve(M, x)
        y /= np.linalg.norm(y)
        if np.linalg.norm(y - x) < 1e-15 or np.linalg.norm(y + x) < 1e-15:
            x = y
            break
        x = y
    return x


def _check(name: str, value: float, floor: float = 1e-10) -> float:
    if not abs(value) > floor:
        raise DegenerateDenominator(f"{name} = {value:.3g}")
    return value


def manifold_slopes(ss: OpenLoopSteadyState, spec: Spectrum, der: OLDerivatives,
                    b_diag: tuple[float, float, float] = (1.0, 1.0, 1.0),
                    eigen_fallback: bool = True) -> ManifoldSlopes:
    """Policy slopes on the stable manifold.

    The rows of the decomposition matrix that define the manifold are the
    left eigenvectors of the two unstable roots; the third row belongs
    to the stable root. Slopes follow from the closed-form row entries and
    are cross-checked against the stable right eigenvector of the Jacobian.

    When a closed-form ratio is 0/0, as for identical agents where
    ``(1, -1, 0)`` is an unstable eigenvector, the slopes come from the
    numerical eigenvectors instead and ``method`` says so.

    Raises
    ------
    DegenerateDenominator
        Naming the vanishing expression, if ``eigen_fallback`` is false or
        the root ordering fails.
    """
    if not spec.ordering_ok:
        raise DegenerateDenominator("root ordering 0 < l1 < 1 < l2 < l3 fails")
    try:
        return _closed_form_slopes(ss, spec, der, b_diag)
    except DegenerateDenominator as exc:
        if not eigen_fallback:
            raise
        return _eigen_slopes(spec, str(exc))


def _eigen_slopes(spec: Spectrum, reason: str) -> ManifoldSlopes:
    """Slopes from numerical eigenvectors when a closed-form ratio is 0/0."""
    vals, left = np.linalg.eig(spec.A.T)
    order = np.argsort(vals.real)
    rows = left[:, order].real.T
    B = np.vstack([rows[1], rows[2], rows[0] / rows[0][2]])
    vec = inverse_iteration(spec.A, spec.roots.roots[0])
    vec = vec / vec[2]
    w = float(B[2] @ vec)
    return ManifoldSlopes(pi_i=float(vec[0]), pi_j=float(vec[1]), E_ij=float("nan"),
                          E_ji=float("nan"), b_matrix=B, w_per_k=w, eigvec=vec,
                          direction_error=0.0, method=f"eigenvector ({reason})")


def _closed_form_slopes(ss, spec, der, b_diag) -> ManifoldSlopes:
    l_st, l_u1, l_u2 = spec.roots.roots
    F1i, F2i, F3i = der.F1_i, der.F2_i, der.F3_i
    F1j, F2j, F3j = der.F1_j, der.F2_j, der.F3_j
    fp = ss.fprime

    den_ij = _check("F1_j - F2_j - l_a", F1j - F2j - l_u1)
    den_ji = _check("F1_i - F2_i - l_b", F1i - F2i - l_u2)
    E_ij = (F1i - F2i - l_u1) / den_ij
    E_ji = (F1j - F2j - l_u2) / den_ji
    _check("f' - l_a", fp - l_u1)
    _check("f' - l_b", fp - l_u2)
    denom = _check("1 - E_ij E_ji", 1.0 - E_ij * E_ji)
    D3 = _check("(F1_i - l)(F1_j - l) - F2_i F2_j", (F1i - l_st) * (F1j - l_st) - F2i * F2j)
    _check("F3_j", F3j)

    b11, b22, b33 = b_diag
    B = np.empty((3, 3))
    B[0] = [b11, E_ij * b11, -(F3j * E_ij + F3i) / (fp - l_u1) * b11]
    B[1] = [E_ji * b22, b22, -(F3i * E_ji + F3j) / (fp - l_u2) * b22]
    B[2] = [(F1j - F2j - l_st) / D3 * b33,
            -(F3i * (F1j - F2j - l_st) / D3 + (fp - l_st)) / F3j * b33,
            b33]
    minor = _check("b11 b22 - b12 b21", B[0, 0] * B[1, 1] - B[0, 1] * B[1, 0])
    pi_i = -(B[0, 2] * B[1, 1] - B[0, 1] * B[1, 2]) / minor
    pi_j = -(B[0, 0] * B[1, 2] - B[0, 2] * B[1, 0]) / minor

    # expanded closed form, kept as an internal consistency check
    num_i = (F3i + E_ij * F3j) * (fp - l_u2) - E_ij * (F3i * E_ji + F3j) * (fp - l_u1)
    num_j = (F3i * E_ji + F3j) * (fp - l_u1) - E_ji * (F3i + E_ij * F3j) * (fp - l_u2)
    full = (fp - l_u1) * (fp - l_u2) * denom
    if abs(num_i / full - pi_i) > 1e-9 * max(1.0, abs(pi_i)) or \
            abs(num_j / full - pi_j) > 1e-9 * max(1.0, abs(pi_j)):
        raise DegenerateDenominator("closed-form slopes disagree with the row solution")

    vec = inverse_iteration(spec.A, l_st)
    vec = vec / vec[2]
    mine = np.array([pi_i, pi_j, 1.0])
    err = float(np.linalg.norm(mine / np.linalg.norm(mine) - vec / np.linalg.norm(vec)))
    w = B[2, 0] * pi_i + B[2, 1] * pi_j + B[2, 2]
    return ManifoldSlopes(pi_i=pi_i, pi_j=pi_j, E_ij=E_ij, E_ji=E_ji, b_matrix=B,
                          w_per_k=w, eigvec=vec, direction_error=err)


def simulate_openloop(ss: OpenLoopSteadyState, der: OLDerivatives, slopes: ManifoldSlopes,
                      k0: float, T: int = 200, spec: Spectrum | None = None,
                      max_rel_dev: float = 0.2) -> Trajectory:
    """Linearized equilibrium path from ``k0`` on the stable manifold.

    Each step applies the Jacobian and projects onto the stable
    eigendirection, which is the decomposition form of the solution with
    the unstable coordinates held at zero. The size of the unstable
    component removed at ``t = 0`` is kept in ``unstable_residual``.
    """
    if T < 1:
        raise ValueError("T must be at least 1")
    A = jacobian(der, ss.fprime)
    xbar = np.array([ss.c_i, ss.c_j, ss.k])
    notes = []
    if abs(k0 - ss.k) > max_rel_dev * ss.k:
        notes.append(f"|k0 - k_bar| exceeds {max_rel_dev} k_bar; linearization may be poor")
    x = np.array([slopes.pi_i, slopes.pi_j, 1.0]) * (k0 - ss.k)
    left = slopes.b_matrix[2]
    right = np.array([slopes.pi_i, slopes.pi_j, 1.0])
    scale = float(left @ right)
    proj = lambda y: right * (left @ y) / scale
    resid = float(np.linalg.norm(proj(A @ x) - A @ x)) / max(np.linalg.norm(A @ x), 1e-300)
    path = np.empty((T + 1, 3))
    path[0] = x
    for t in range(T):
        x = proj(A @ x)
        path[t + 1] = x
    dev = path[:, 2].copy()
    path += xbar
    return Trajectory(t=np.arange(T + 1, dtype=float), k=path[:, 2], c_i=path[:, 0],
                      c_j=path[:, 1], k_ref=ss.k, label="openloop-linearized",
                      warnings=notes, unstable_residual=resid, dev=dev)


def compare_autarky(ss: OpenLoopSteadyState, model: ModelSpec) -> Proposition1Report:
    """Open-loop steady state against both autarky steady states."""
    ei = solve_autarky(model.agent_i, model.technology)[0]
    ej = solve_autarky(model.agent_j, model.technology)[0]
    below = ss.c_i <= ei.c_a and ss.c_j <= ej.c_a
    return Proposition1Report(
        consumption_ordered=ss.c_i <= ss.c_j,
        capital_chain=ss.k <= ej.k_a <= ei.k_a,
        below_autarky_consumption=below,
        main_text_direction=ei.c_a <= ss.c_i and ej.c_a <= ss.c_j,
        k_bar=ss.k, k_a_i=ei.k_a, k_a_j=ej.k_a, c_a_i=ei.c_a, c_a_j=ej.c_a,
    )


def ol_local_stability(ss: OpenLoopSteadyState) -> float:
    """Weak local-stability expression; negative means stable."""
    di, dj = ss.bundle_i.delta, ss.bundle_j.delta
    return di * dj * (ss.fprime - 1.0) + (di + dj) * ss.fsecond / ss.fprime
