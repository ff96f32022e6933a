import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from recgrowth.errors import InvalidBracket
from recgrowth.numerics import Bracket, GridFunction, bisect, companion_roots, scan_brackets, solve_cubic


def test_bisect_sqrt2():
    f = lambda x: x * x - 2
    r = bisect(f, Bracket.from_function(f, 1.0, 2.0), 1e-12)
    assert abs(r.root - math.sqrt(2)) < 1e-12


def test_bisect_linear():
    f = lambda x: x - 0.5
    assert bisect(f, Bracket.from_function(f, 0.0, 1.0)).root == pytest.approx(0.5, abs=1e-12)


def test_no_sign_change():
    with pytest.raises(InvalidBracket):
        Bracket.from_function(lambda x: x * x + 1, 0.0, 1.0)


def test_scan_cubic_roots():
    f = lambda x: (x - 1) * (x - 2) * (x - 3)
    brs = scan_brackets(f, (0.0, 4.0), 400)
    assert len(brs) == 3
    roots = [bisect(f, b).root for b in brs]
    assert np.allclose(roots, [1, 2, 3], atol=1e-11)


def test_scan_empty():
    assert scan_brackets(lambda x: x * x + 1, (0.0, 4.0)) == []


def test_scan_exact_node():
    brs = scan_brackets(lambda x: x - 1.0, (0.0, 2.0), 3)
    assert len(brs) == 1 and brs[0].exact
    assert brs[0].hi - brs[0].lo == pytest.approx(1.0)
    assert bisect(lambda x: x - 1.0, brs[0]).root == 1.0


def test_scan_skips_nonfinite():
    f = lambda x: math.nan if 0.4 < x < 0.6 else x - 0.5
    assert scan_brackets(f, (0.0, 1.0), 11) == []


@pytest.mark.parametrize("coef,roots", [((-6.0, 11.0, -6.0), [1, 2, 3]), ((0.0, -1.0, 0.0), [-1, 0, 1])])
def test_cubic_examples(coef, roots):
    c = solve_cubic(*coef)
    assert c.all_real and np.allclose(c.roots, roots, atol=1e-12)


def test_cubic_single_real_root():
    c = solve_cubic(0.0, 0.0, -8.0)
    assert not c.all_real and c.roots == pytest.approx((2.0,))


def test_cubic_against_companion_oracle():
    rng = np.random.default_rng(0)
    for _ in range(100):
        r = np.sort(rng.uniform(-5, 5, 3))
        c2, c1, c0 = -r.sum(), r[0] * r[1] + r[0] * r[2] + r[1] * r[2], -r.prod()
        mine = solve_cubic(c2, c1, c0)
        oracle = np.sort(companion_roots(c2, c1, c0).real)
        assert mine.all_real
        assert np.max(np.abs(np.array(mine.roots) - oracle)) < 1e-8


@settings(max_examples=200, deadline=None)
@given(st.floats(-10, 10), st.floats(-10, 10), st.floats(-10, 10))
def test_cubic_residuals(c2, c1, c0):
    c = solve_cubic(c2, c1, c0)
    scale = 1 + max(abs(r) for r in c.roots) ** 3
    assert np.all(c.residuals() <= 1e-8 * scale)


def test_grid_identity_and_constant():
    h = GridFunction(0.0, 1.0, np.linspace(0, 1, 11))
    assert h(0.37) == pytest.approx(0.37)
    k = GridFunction(0.9, 1.1, np.full(5, 1.0))
    assert k.compose_self(0.95) == 1.0


def test_grid_linear_lipschitz():
    ks = 1.0
    nodes = np.linspace(0.95, 1.05, 201)
    h = GridFunction(0.95, 1.05, ks - 0.5 * (nodes - ks))
    assert abs(h.lipschitz_constant() - 0.5) < 1e-12
    assert h.slope_at(ks) == pytest.approx(-0.5, abs=1e-12)


def test_grid_clamps_and_is_read_only():
    h = GridFunction(0.0, 1.0, [0.0, 1.0, 4.0])
    assert h(2.0) == 4.0 and h(-1.0) == 0.0
    with pytest.raises(ValueError):
        h.values[0] = 3.0
    g = GridFunction(0.0, 1.0, [0.0, 1.5, 4.0])
    assert h.sup_distance(g) == 0.5
