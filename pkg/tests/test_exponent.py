"""Variable exponents: conjugation, scaling, reciprocal algebra and log-Hölder diagnostics."""

import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from varsparse.exponent import (
    ExponentError,
    ExponentFunction,
    check_log_holder,
    check_loglog,
    delta_from,
    log_holder_flag,
    reciprocal_add,
    reciprocal_subtract,
)
from varsparse.grid import Domain, GridFunction

DOM = Domain(1, 0, 4)


def _two_sided(left, right, dom=DOM, p_inf=None):
    x = dom.centers()[..., 0]
    return ExponentFunction.from_grid(GridFunction(dom, np.where(x < 0, left, right)), p_inf)


def test_conjugate_examples():
    assert np.all(ExponentFunction.constant(DOM, 2.0).conjugate().values == 2.0)
    assert np.all(ExponentFunction.constant(DOM, 3.0).conjugate().values == 1.5)
    c = _two_sided(2.0, 4.0, p_inf=4.0).conjugate()
    assert sorted(set(c.values.tolist())) == [4 / 3, 2.0]
    assert c.p_minus == 4 / 3
    assert c.p_inf == 4 / 3


def test_conjugate_endpoints():
    one = ExponentFunction.constant(DOM, 1.0).conjugate()
    assert one.inf_mask.all()
    assert np.all(one.conjugate().values == 1.0)


def test_conjugate_extremes_swap():
    p = ExponentFunction.from_expression("2 + sin(3*x1)", DOM)
    c = p.conjugate()
    assert c.p_minus == pytest.approx(p.p_plus / (p.p_plus - 1), rel=1e-15)
    assert c.p_plus == pytest.approx(p.p_minus / (p.p_minus - 1), rel=1e-15)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(1.0, 50.0), min_size=32, max_size=32))
def test_double_conjugate_is_identity(vals):
    p = ExponentFunction.from_grid(GridFunction(Domain(1, 0, 4), np.array(vals)))
    back = p.conjugate().conjugate()
    np.testing.assert_allclose(back.values, p.values, rtol=1e-12)


def test_reciprocal_subtract_examples():
    two = ExponentFunction.constant(DOM, 2.0)
    assert np.all(reciprocal_subtract(two, ExponentFunction.constant(DOM, 4.0)).values == 4.0)
    assert reciprocal_subtract(two, two).inf_mask.all()
    beta = reciprocal_subtract(two, _two_sided(3.0, 4.0))
    assert sorted(set(beta.values.tolist())) == pytest.approx([4.0, 6.0], rel=1e-15)
    with pytest.raises(ExponentError):
        reciprocal_subtract(_two_sided(3.0, 4.0), two)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.floats(1.0, 10.0), st.floats(0.0, 10.0)), min_size=32, max_size=32))
def test_reciprocal_subtract_then_add_recovers_p(pairs):
    dom = Domain(1, 0, 4)
    p = np.array([a for a, _ in pairs])
    q = p + np.array([d for _, d in pairs])
    P = ExponentFunction.from_grid(GridFunction(dom, p))
    Q = ExponentFunction.from_grid(GridFunction(dom, q))
    back = reciprocal_add(reciprocal_subtract(P, Q), Q)
    np.testing.assert_allclose(back.values, p, rtol=1e-12)


def test_scale():
    two = ExponentFunction.constant(DOM, 2.0)
    assert np.all(two.scale(1.5).values == 3.0)
    assert np.all(two.scale(0.5).values == 1.0)
    with pytest.raises(ExponentError):
        two.scale(0.4)


def test_delta_from_examples():
    assert np.all(delta_from(ExponentFunction.constant(DOM, 2.0), 0.9).values == pytest.approx(0.4))
    assert np.all(delta_from(ExponentFunction.constant(DOM, 1 / 0.9), 0.9).values == pytest.approx(0.0, abs=1e-15))
    vals = sorted(set(np.round(delta_from(_two_sided(2.0, 2.5), 0.9).values, 12).tolist()))
    assert vals == [0.4, 0.5]
    with pytest.raises(ExponentError):
        delta_from(ExponentFunction.constant(DOM, 1.0), 0.9)


def test_log_holder_constant_exponent_is_zero():
    p = ExponentFunction.from_expression("3", DOM, 3.0)
    rep = check_log_holder(p)
    assert rep.c_local == 0.0 and rep.c_global == 0.0
    assert check_loglog(p) == 0.0


def test_log_holder_needs_p_inf():
    with pytest.raises(ExponentError):
        check_log_holder(ExponentFunction.from_expression("3", DOM))


def _brute_force(p: ExponentFunction):
    dom = p.domain
    x = dom.centers()[..., 0]
    inv = 1.0 / p.values
    loc = max(
        abs(inv[i] - inv[j]) * math.log(math.e + 1 / abs(x[i] - x[j]))
        for i, j in itertools.combinations(range(x.size), 2)
    )
    glob = float((np.abs(inv - 1 / p.p_inf) * np.log(math.e + np.abs(x))).max())
    return loc, glob


def test_log_holder_smooth_exponent_matches_brute_force():
    dom = Domain(1, 2, 3)
    p = ExponentFunction.from_expression("1/(1/2 + 1/(4*log(e + abs(x1))))", dom, 2.0)
    rep = check_log_holder(p)
    loc, glob = _brute_force(p)
    assert rep.c_global == pytest.approx(glob, rel=1e-14)
    assert rep.c_global <= 0.25 + 1e-12
    assert rep.c_local == pytest.approx(loc, rel=1e-12)


def test_step_exponent_flagged_under_refinement():
    coarse = check_log_holder(_two_sided(2.0, 4.0, Domain(1, 0, 6), 2.0)).c_local
    fine = check_log_holder(_two_sided(2.0, 4.0, Domain(1, 0, 8), 2.0)).c_local
    assert log_holder_flag(coarse, fine, 6, 8)
    smooth = [check_log_holder(ExponentFunction.from_expression("2 + sin(x1)", Domain(1, 0, J), 2.0)).c_local for J in (6, 8)]
    assert not log_holder_flag(smooth[0], smooth[1], 6, 8)


def test_loglog_step_grows():
    c = [check_loglog(_two_sided(2.0, 4.0, Domain(1, 0, J))) for J in (4, 8)]
    assert c[1] > c[0] > 0
