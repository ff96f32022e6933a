"""Parametric primitives of the two-agent growth game.

Three closed-form families are provided:

* discount factor ``alpha(c) = alpha_bar - (alpha_bar - alpha0) * exp(-a c)``,
* felicity ``u(c) = scale * c**(1 - sigma) / (1 - sigma)``,
* technology ``f(k) = A * k**beta`` (net of depreciation).

Each family exposes exact first and second derivatives so that every
downstream solver can be tested against finite differences.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import AssumptionViolated, DomainError, InverseDomainError

__all__ = [
    "DiscountFamily",
    "UtilityFamily",
    "TechnologyFamily",
    "Agent",
    "ModelSpec",
    "MarginalBundle",
    "ValidationReport",
    "eval_family",
    "invert_alpha",
    "marginal_bundle",
    "validate_model",
    "canonical_model",
    "oscillatory_model",
    "symmetric_model",
    "random_dominant_pair",
]


@dataclass(frozen=True)
class DiscountFamily:
    """Increasing, concave, bounded discount factor.

    Parameters
    ----------
    alpha0 : float
        Value at zero consumption.
    alpha_bar : float
        Supremum, strictly below one.
    a : float
        Curvature (per unit of consumption).
    """

    alpha0: float
    alpha_bar: float
    a: float

    @property
    def gap(self) -> float:
        return self.alpha_bar - self.alpha0

    def value(self, c):
        return self.alpha_bar - self.gap * np.exp(-self.a * np.asarray(c, dtype=float))

    def d1(self, c):
        return self.a * self.gap * np.exp(-self.a * np.asarray(c, dtype=float))

    def d2(self, c):
        return -self.a * self.d1(c)

    def inverse(self, v: float) -> float:
        """Consumption level ``c`` with ``alpha(c) = v``."""
        if not (self.alpha0 <= v < self.alpha_bar) or not math.isfinite(v):
            raise InverseDomainError(
                f"v={v!r} outside [{self.alpha0}, {self.alpha_bar})"
            )
        return -math.log((self.alpha_bar - v) / self.gap) / self.a


@dataclass(frozen=True)
class UtilityFamily:
    """Power felicity with exponent ``1 - sigma``, ``0 < sigma < 1``."""

    sigma: float
    scale: float = 1.0

    def value(self, c):
        c = np.asarray(c, dtype=float)
        return self.scale * c ** (1.0 - self.sigma) / (1.0 - self.sigma)

    def d1(self, c):
        return self.scale * np.asarray(c, dtype=float) ** (-self.sigma)

    def d2(self, c):
        c = np.asarray(c, dtype=float)
        return -self.sigma * self.scale * c ** (-self.sigma - 1.0)


@dataclass(frozen=True)
class TechnologyFamily:
    """Cobb-Douglas technology ``f(k) = A k**beta``."""

    A: float
    beta: float

    @property
    def k_max(self) -> float:
        """Maximum sustainable capital, the positive solution of ``f(k) = k``."""
        return self.A ** (1.0 / (1.0 - self.beta))

    def value(self, k):
        return self.A * np.asarray(k, dtype=float) ** self.beta

    def d1(self, k):
        return self.A * self.beta * np.asarray(k, dtype=float) ** (self.beta - 1.0)

    def d2(self, k):
        k = np.asarray(k, dtype=float)
        return self.A * self.beta * (self.beta - 1.0) * k ** (self.beta - 2.0)

    def inverse_d1(self, slope: float) -> float:
        """Capital level at which ``f'(k) = slope``."""
        return (self.A * self.beta / slope) ** (1.0 / (1.0 - self.beta))


@dataclass(frozen=True)
class Agent:
    """Preferences of one player."""

    alpha: DiscountFamily
    u: UtilityFamily


@dataclass(frozen=True)
class ModelSpec:
    """Two agents, one technology and the income share of agent ``i``.

    Agent ``i`` is the more patient player by convention.
    """

    agent_i: Agent
    agent_j: Agent
    technology: TechnologyFamily
    theta_i: float = 0.6

    @property
    def theta_j(self) -> float:
        return 1.0 - self.theta_i

    @property
    def agents(self) -> tuple[Agent, Agent]:
        return self.agent_i, self.agent_j

    def swapped(self) -> "ModelSpec":
        return replace(self, agent_i=self.agent_j, agent_j=self.agent_i)


@dataclass(frozen=True)
class MarginalBundle:
    """Stationary marginal quantities of one agent at consumption ``c``.

    Attributes
    ----------
    v_bar : float
        Stationary prospective utility ``u/(1-alpha)``.
    U, W : float
        ``u' + alpha' v_bar`` and ``u'' + alpha'' v_bar``.
    delta, omega : float
        ``alpha'/alpha`` and ``delta - W/U``.
    """

    c: float
    v_bar: float
    U: float
    W: float
    delta: float
    omega: float
    alpha: float
    alpha_p: float


@dataclass
class ValidationReport:
    """Outcome of every structural check, keyed by check name."""

    checks: dict[str, bool] = field(default_factory=dict)
    details: dict[str, str] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(self.checks.values())

    @property
    def failures(self) -> list[str]:
        return [name for name, passed in self.checks.items() if not passed]

    def as_dict(self) -> dict:
        return {"ok": self.ok, "checks": dict(self.checks), "details": dict(self.details)}


def eval_family(family, x: float) -> tuple[float, float, float]:
    """Value, first and second derivative of a family at ``x >= 0``.

    Raises
    ------
    DomainError
        If ``x < 0``, or ``x == 0`` for the power families whose
        derivatives blow up at the origin.
    """
    x = float(x)
    if not math.isfinite(x) or x < 0.0:
        raise DomainError(f"argument must be finite and nonnegative, got {x!r}")
    if x == 0.0 and isinstance(family, (UtilityFamily, TechnologyFamily)):
        raise DomainError("derivatives of power families are unbounded at 0")
    return float(family.value(x)), float(family.d1(x)), float(family.d2(x))


def invert_alpha(family: DiscountFamily, v: float) -> float:
    """Inverse of the discount factor on ``[alpha0, alpha_bar)``."""
    return family.inverse(float(v))


def marginal_bundle(agent: Agent, c: float) -> MarginalBundle:
    """Stationary marginal bundle at consumption ``c > 0``.

    Only meaningful at candidate stationary consumptions, because the
    prospective utility is the constant-path value ``u(c)/(1 - alpha(c))``.
    """
    c = float(c)
    if not (c > 0.0) or not math.isfinite(c):
        raise DomainError(f"consumption must be positive, got {c!r}")
    al, alp, alpp = (float(g(c)) for g in (agent.alpha.value, agent.alpha.d1, agent.alpha.d2))
    u, up, upp = (float(g(c)) for g in (agent.u.value, agent.u.d1, agent.u.d2))
    v_bar = u / (1.0 - al)
    U = up + alp * v_bar
    W = upp + alpp * v_bar
    delta = alp / al
    return MarginalBundle(c=c, v_bar=v_bar, U=U, W=W, delta=delta,
                          omega=delta - W / U, alpha=al, alpha_p=alp)


def validate_model(
    spec: ModelSpec,
    comparison_interval: tuple[float, float] | None = None,
    *,
    strict: bool = True,
    n_grid: int = 1000,
) -> ValidationReport:
    """Check the structural assumptions of a model.

    Parameters
    ----------
    spec : ModelSpec
    comparison_interval : (float, float), optional
        Consumption interval on which ``alpha_i >= alpha_j`` is checked.
        Defaults to ``[0, k_max]``, the feasible consumption range.
    strict : bool
        Raise :class:`AssumptionViolated` when any check fails.
    n_grid : int
        Number of dominance-check nodes.
    """
    rep = ValidationReport()
    tech = spec.technology

    def put(name: str, passed: bool, detail: str = "") -> None:
        rep.checks[name] = bool(rep.checks.get(name, True) and passed)
        if detail and not passed:
            rep.details[name] = detail

    values = [tech.A, tech.beta, spec.theta_i]
    for ag in spec.agents:
        values += [ag.alpha.alpha0, ag.alpha.alpha_bar, ag.alpha.a, ag.u.sigma, ag.u.scale]
    if not all(math.isfinite(float(v)) for v in values):
        put("finite", False, "non-finite parameter")
        if strict:
            raise AssumptionViolated(rep.failures, "non-finite parameter")
        return rep
    put("finite", True)

    for tag, ag in (("i", spec.agent_i), ("j", spec.agent_j)):
        al = ag.alpha
        put("U1", 0.0 < al.alpha0 < 1.0 and al.a > 0.0,
            f"agent {tag}: need 0<alpha0<1 and a>0")
        put("U2", al.alpha0 < al.alpha_bar < 1.0,
            f"agent {tag}: need alpha0<alpha_bar<1")
        put("U3", ag.u.scale > 0.0 and ag.u.sigma < 1.0,
            f"agent {tag}: need scale>0 and sigma<1")
        put("U4", ag.u.sigma > 0.0, f"agent {tag}: need sigma>0")

    put("T1", tech.A > 0.0 and 0.0 < tech.beta < 1.0, "need A>0 and 0<beta<1")
    if rep.checks["T1"]:
        put("T2", float(tech.d1(tech.k_max)) < 1.0, "need f'(k_max)<1")
        probe = 1e-6 * tech.k_max
        need = max(1.0 / spec.agent_i.alpha.alpha0 if spec.agent_i.alpha.alpha0 > 0 else math.inf,
                   1.0 / spec.agent_j.alpha.alpha0 if spec.agent_j.alpha.alpha0 > 0 else math.inf)
        put("productivity", float(tech.d1(probe)) > need,
            "f'(0+) must exceed 1/alpha(0) for both agents")
    else:
        put("T2", False, "technology invalid")
        put("productivity", False, "technology invalid")

    put("shares", 0.5 < spec.theta_i < 1.0, "need 1/2 < theta_i < 1")

    if comparison_interval is None:
        hi = tech.k_max if rep.checks["T1"] else 1.0
        comparison_interval = (0.0, hi)
    grid = np.linspace(comparison_interval[0], comparison_interval[1], n_grid)
    gap = spec.agent_i.alpha.value(grid) - spec.agent_j.alpha.value(grid)
    put("dominance", bool(np.all(gap >= 0.0)),
        f"alpha_i < alpha_j somewhere (min gap {float(gap.min()):.3g})")

    if strict and not rep.ok:
        raise AssumptionViolated(
            rep.failures, "; ".join(rep.details[k] for k in rep.failures if k in rep.details)
        )
    return rep


def canonical_model() -> ModelSpec:
    """Reference model M1 used by the golden tests."""
    return ModelSpec(
        agent_i=Agent(DiscountFamily(0.55, 0.95, 2.0), UtilityFamily(0.5, 1.0)),
        agent_j=Agent(DiscountFamily(0.50, 0.90, 2.0), UtilityFamily(0.5, 1.0)),
        technology=TechnologyFamily(1.0, 0.3),
        theta_i=0.6,
    )


def oscillatory_model() -> ModelSpec:
    """Nearly linear felicity with high patience.

    Its Markov equilibrium has ``a = f' - G1_i - G1_j < 1``, which the
    canonical model does not offer, so suitable second-order policy
    curvature places it in the stable oscillatory region.
    """
    return ModelSpec(
        agent_i=Agent(DiscountFamily(0.73, 0.97, 2.2), UtilityFamily(0.05, 1.0)),
        agent_j=Agent(DiscountFamily(0.72, 0.96, 2.2), UtilityFamily(0.05, 1.0)),
        technology=TechnologyFamily(1.2, 0.5),
        theta_i=0.6,
    )


def symmetric_model(base: ModelSpec | None = None) -> ModelSpec:
    """Copy of ``base`` (default M1) with agent ``j`` identical to agent ``i``."""
    base = canonical_model() if base is None else base
    return replace(base, agent_j=base.agent_i)


def random_dominant_pair(rng: np.random.Generator) -> ModelSpec:
    """Draw a model in which agent ``i`` is uniformly more patient.

    Both agents share the gap ``alpha_bar - alpha0`` and curvature ``a``;
    agent ``i`` is shifted up by a positive constant, so the difference
    ``alpha_i - alpha_j`` is that constant at every consumption level.
    """
    alpha0_j = rng.uniform(0.40, 0.62)
    gap = rng.uniform(0.20, 0.32)
    shift = rng.uniform(0.005, 0.04)
    a = rng.uniform(0.5, 4.0)
    sigma = rng.uniform(0.2, 0.8)
    scale = rng.uniform(0.5, 2.0)
    u = UtilityFamily(sigma, scale)
    return ModelSpec(
        agent_i=Agent(DiscountFamily(alpha0_j + shift, alpha0_j + gap + shift, a), u),
        agent_j=Agent(DiscountFamily(alpha0_j, alpha0_j + gap, a), u),
        technology=TechnologyFamily(rng.uniform(0.8, 1.5), rng.uniform(0.25, 0.40)),
        theta_i=float(rng.uniform(0.55, 0.75)),
    )
