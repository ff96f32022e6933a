import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from recgrowth.errors import DegenerateClassification
from recgrowth.markov import (
    OSCILLATORY_EPS_FRACTION,
    OSCILLATORY_G11,
    TABLE1_CANONICAL,
    SyntheticH,
    classify_stability,
    compare_openloop,
    first_order_effects,
    g11_for_target_b,
    h_partials,
    lemma3_bounds,
    markov_local_stability,
    operator_T,
    second_third_order_effects,
    simulate_markov,
    solve_markov,
)
from recgrowth.model import Agent, DiscountFamily, ModelSpec, UtilityFamily, oscillatory_model
from recgrowth.openloop import ol_local_stability, solve_openloop


@pytest.fixture(scope="module")
def mk(m1):
    return solve_markov(m1)


@pytest.fixture(scope="module")
def sym(m1):
    m = ModelSpec(m1.agent_i, m1.agent_i, m1.technology, 0.5)
    return m, solve_markov(m)


def test_m1_golden(mk):
    assert mk.k_star == pytest.approx(0.0748275008516736, rel=1e-9)
    assert mk.effects.a == pytest.approx(1.2349875, rel=1e-6)
    assert mk.effects.b == pytest.approx(4.40186, rel=1e-5)


def test_m1_residuals(mk):
    assert max(mk.residuals().values()) < 1e-10


def test_first_order_bounds_and_deflators(mk):
    e = mk.effects
    fp = e.fprime
    assert 0.0 < e.G1_i < fp and 0.0 < e.G1_j < fp
    bi, bj = mk.bundle_i, mk.bundle_j
    assert e.xi_ij == pytest.approx(1.0 - e.G1_j / fp, abs=1e-12)
    assert e.xi_ji == pytest.approx(1.0 - e.G1_i / fp, abs=1e-12)
    assert e.xi_ij < e.xi_ji
    assert e.g1_residual < 1e-12 and e.g2_residual < 1e-10
    assert bi.delta > 0 and bj.delta > 0


def test_symmetric_effects_equal(sym):
    e = sym[1].effects
    assert e.G1_i == pytest.approx(e.G1_j, rel=1e-12)
    assert e.nu_ij == pytest.approx(e.nu_ji, rel=1e-12)
    assert e.xi_ij == pytest.approx(e.xi_ji, rel=1e-12)


def test_nu_reduces_to_eta_without_rival_response(m1):
    flat = Agent(DiscountFamily(0.9, 0.9 + 1e-12, 2.0), UtilityFamily(0.5, 1.0))
    m = ModelSpec(m1.agent_i, flat, m1.technology, m1.theta_i)
    from recgrowth.model import marginal_bundle

    bi = marginal_bundle(m.agent_i, 0.1)
    bj = marginal_bundle(flat, 0.1)
    fp, fpp = 1.8, -3.0
    e = second_third_order_effects(bi, bj, fp, fpp, 0.0, 0.0)
    eta_i = bi.delta * (fp - 1.0) + fpp / fp
    assert abs(e.G1_j) < 1e-9
    assert e.nu_ij == pytest.approx(eta_i, rel=1e-8)


def test_unit_deflator_reproduces_openloop(m1):
    mk = solve_markov(m1, xi_override=1.0)
    ol = solve_openloop(m1)
    assert abs(mk.k_star - ol.k) < 1e-10
    assert markov_local_stability(mk).value == pytest.approx(ol_local_stability(ol), rel=1e-9)


def test_saving_slope_is_a_minus_b(mk):
    ls = markov_local_stability(mk)
    assert ls.s_prime == pytest.approx(mk.effects.a - mk.effects.b, rel=1e-12)
    assert ls.stable == (abs(ls.s_prime) < 1.0)


def test_effects_independent_of_g11_for_first_order(mk):
    e = second_third_order_effects(mk.bundle_i, mk.bundle_j, mk.effects.fprime,
                                   mk.effects.fsecond, 0.3, -0.2)
    assert e.a == mk.effects.a and e.G1_i == mk.effects.G1_i


def test_b_affine_in_g11(m1, mk):
    e = mk.effects
    bs = [second_third_order_effects(mk.bundle_i, mk.bundle_j, e.fprime, e.fsecond, g, g).b
          for g in (0.0, 1.0, 2.0)]
    assert bs[2] - bs[1] == pytest.approx(bs[1] - bs[0], rel=1e-10)
    g = g11_for_target_b(m1, -0.5)
    b = second_third_order_effects(mk.bundle_i, mk.bundle_j, e.fprime, e.fsecond, g, g).b
    assert b == pytest.approx(-0.5, abs=1e-10)


def test_first_order_linear_system():
    from recgrowth.model import canonical_model, marginal_bundle

    m = canonical_model()
    bi, bj = marginal_bundle(m.agent_i, 0.2), marginal_bundle(m.agent_j, 0.15)
    fo = first_order_effects(bi, bj, 1.7)
    assert fo.system_residual < 1e-14
    assert fo.a == pytest.approx(1.7 - fo.G1_i - fo.G1_j)


@pytest.mark.parametrize("case", sorted(TABLE1_CANONICAL))
def test_table_points(case):
    a, b = TABLE1_CANONICAL[case]
    c = classify_stability(a, b)
    assert c.case_id == case
    assert c.lambda1 == -a and c.lambda2 == pytest.approx(a / (1 + b))
    assert abs(c.P(c.lambda1)) < 1e-12 and abs(c.P(c.lambda2)) < 1e-12


def test_untabulated_region():
    c = classify_stability(1.5, -3.0)
    assert c.case_id == 10 and c.label == "saddle"


@pytest.mark.parametrize("a,b", [(1.0, 0.5), (0.5, 0.0), (0.5, -1.0), (1.5, 0.5),
                                 (0.5, -1.5), (0.5, -2.0)])
def test_degenerate_boundaries_raise(a, b):
    with pytest.raises(DegenerateClassification):
        classify_stability(a, b)


def test_nonpositive_a_rejected():
    with pytest.raises(ValueError):
        classify_stability(0.0, 0.5)


@pytest.mark.parametrize("a,b,group", [(0.5, -0.25, "II"), (0.5, 0.5, "I"),
                                       (2.5, -1.4, "III")])
def test_h_partials_groups(a, b, group):
    c = classify_stability(a, b)
    H1, H2, g = h_partials(c)
    assert g == group == c.group
    assert H1 == pytest.approx(c.lambda1 * c.lambda2 / (c.lambda1 + c.lambda2))
    assert H2 == pytest.approx(1.0 / (c.lambda1 + c.lambda2))


def test_admissible_slope_interval():
    c = classify_stability(0.5, -0.25)
    b = lemma3_bounds(c.H1, c.H2, c.lambda1, c.lambda2)
    lam = 0.5 * (b["lambda_lower"] + c.lambda1)
    q = c.H1 + c.H2 * lam * lam
    assert lam < q < 0.0


@given(st.floats(0.05, 3.0), st.floats(-3.5, 3.0))
@settings(max_examples=200, deadline=None)
def test_characteristic_roots(a, b):
    try:
        c = classify_stability(a, b, tol=1e-6)
    except DegenerateClassification:
        return
    scale = max(1.0, c.lambda1 ** 2, c.lambda2 ** 2) * max(1.0, abs(a) * abs(b), abs(1 + b))
    assert abs(c.P(c.lambda1)) <= 1e-10 * scale
    assert abs(c.P(c.lambda2)) <= 1e-10 * scale


def test_synthetic_operator_recovers_slope():
    fp = operator_T(SyntheticH(-0.5, 2.0 / 3.0))
    assert fp.fixes_kstar and fp.lipschitz_ok
    assert abs(fp.slope_at_kstar - fp.target_slope) < 1e-8
    assert fp.final_residual < 1e-10


def test_simulate_from_steady_state_is_constant():
    fp = operator_T(SyntheticH(-0.5, 2.0 / 3.0))
    tr, osc = simulate_markov(fp, fp.k_star, 30)
    assert np.all(tr.k == fp.k_star) and not osc


def test_simulate_rejects_outside_interval():
    fp = operator_T(SyntheticH(-0.5, 2.0 / 3.0))
    with pytest.raises(ValueError):
        simulate_markov(fp, fp.h.hi + 1.0)


def test_operator_rejects_even_grid():
    with pytest.raises(ValueError):
        operator_T(SyntheticH(-0.5, 2.0 / 3.0), n_grid=200)


def test_oscillatory_model():
    m = oscillatory_model()
    ss = solve_markov(m, (OSCILLATORY_G11, OSCILLATORY_G11))
    fp = operator_T(ss, model=m, eps=OSCILLATORY_EPS_FRACTION * ss.k_star)
    assert fp.group == "II" and fp.lipschitz_ok and fp.fixes_kstar
    tr, osc = simulate_markov(fp, 0.5 * (ss.k_star + fp.h.hi), 100)
    assert osc
    assert abs(tr.k[-1] - ss.k_star) < abs(tr.k[0] - ss.k_star)


def test_compare_openloop_m1(m1, mk):
    r = compare_openloop(mk, solve_openloop(m1))
    assert r.capital_lower and r.xi_ordered
    assert r.k_star < r.k_bar


def test_compare_symmetric_deflators(sym):
    m, mk = sym
    r = compare_openloop(mk, solve_openloop(m))
    assert not r.xi_ordered
    assert mk.effects.xi_ij == pytest.approx(mk.effects.xi_ji, rel=1e-12)
    assert r.capital_lower
    assert math.isclose(mk.c_i, mk.c_j, rel_tol=1e-9)
