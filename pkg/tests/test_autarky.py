import numpy as np
import pytest

from recgrowth.autarky import (
    autarky_stability,
    lemma1_check,
    solve_autarky,
    stability_sides,
    strategy_bound,
    value_iterate,
)
from recgrowth.model import Agent, DiscountFamily, TechnologyFamily, UtilityFamily, symmetric_model

K_A_I, C_A_I = 0.1242040701905773, 0.4106567037236176
K_A_J, C_A_J = 0.11259612684405917, 0.40675016548002574


@pytest.fixture(scope="module")
def vt_i(m1):
    return value_iterate(m1.agent_i, m1.technology, n_grid=500, tol=1e-9)


def test_m1_agent_i_golden(m1):
    eqs = solve_autarky(m1.agent_i, m1.technology)
    assert len(eqs) == 1
    e = eqs[0]
    assert e.k_a == pytest.approx(K_A_I, abs=1e-11)
    assert e.c_a == pytest.approx(C_A_I, abs=1e-11)
    assert e.residual(m1.agent_i, m1.technology) < 1e-10


def test_m1_agent_j_below_i(m1):
    e = solve_autarky(m1.agent_j, m1.technology)[0]
    assert e.k_a == pytest.approx(K_A_J, abs=1e-11)
    assert e.k_a <= K_A_I


def test_near_constant_discount_limit():
    a0 = 0.55
    ag = Agent(DiscountFamily(a0, a0 + 1e-9, 2.0), UtilityFamily(0.5, 1.0))
    tech = TechnologyFamily(1.0, 0.3)
    k = solve_autarky(ag, tech)[0].k_a
    assert abs(k - (tech.A * tech.beta * a0) ** (1 / (1 - tech.beta))) < 1e-6


def test_m1_stable_and_criteria_agree(m1):
    e = solve_autarky(m1.agent_i, m1.technology)[0]
    d = autarky_stability(e, m1.agent_i, m1.technology)
    assert d.eta < 0 and d.slope_criterion and d.agree


@pytest.mark.parametrize("k", np.linspace(0.02, 0.9, 12))
def test_steep_agent_criteria_agree_everywhere(k):
    ag = Agent(DiscountFamily(0.5, 0.95, 50.0), UtilityFamily(0.5, 1.0))
    eta, lhs, rhs = stability_sides(ag, TechnologyFamily(1.0, 0.3), float(k))
    assert (eta < 0) == (lhs > rhs)


def test_value_table_shape(m1, vt_i):
    assert vt_i.v[0] == 0.0
    assert np.all(np.diff(vt_i.v) > 0)
    assert vt_i.monotone and vt_i.residual < 1e-9


def test_value_policy_matches_steady_state(vt_i):
    cell = vt_i.grid[1] - vt_i.grid[0]
    assert abs(float(vt_i.policy_at(K_A_I)) - C_A_I) <= cell


def test_strategy_bound_at_k_max(m1, vt_i):
    km = m1.technology.k_max
    d = strategy_bound(m1.agent_i, m1.technology, vt_i, km)
    assert 0.0 < d < float(m1.technology.value(km))
    assert d == pytest.approx(0.76177, abs=5e-4)


def test_strategy_bound_shrinks_with_resource_shift(m1, vt_i):
    base = strategy_bound(m1.agent_i, m1.technology, vt_i, 0.5)
    shifted = strategy_bound(m1.agent_i, m1.technology, vt_i, 0.5, resource_shift=0.2)
    assert shifted < base


def test_autarky_ordering(m1):
    assert lemma1_check(m1).ok


def test_autarky_ordering_symmetric_equal():
    rep = lemma1_check(symmetric_model())
    assert abs(rep.k_a_i - rep.k_a_j) < 1e-10


def test_value_iterate_rejects_bad_inputs(m1):
    with pytest.raises(ValueError):
        value_iterate(m1.agent_i, m1.technology, n_grid=10)
