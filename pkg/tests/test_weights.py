"""Weight classes, bump constants, cube functionals, symbol norms and openness."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from varsparse.exponent import ExponentFunction
from varsparse.expr import parse_expression
from varsparse.gphi import Power, example1
from varsparse.grid import Domain, GridFunction, constant, sample
from varsparse.weights import (
    Constant,
    PowerMeasure,
    VarNorm,
    WeightError,
    ap_constant,
    apq_constant,
    bmo_eta_delta_norm,
    bmo_eta_delta_scan,
    bump_constant_gphi,
    bump_constant_power,
    check_weight,
    divergent,
    extremal_v,
    lipschitz_a_norm,
    lipschitz_power_check,
    openness_exponents,
    symbol_pointwise_sweep,
    t_infty_constant,
)

DOM = Domain(1, 0, 6)


def _s(src, dom=DOM):
    return sample(parse_expression(src, dom.dimension), dom)


def _const_p(p, dom=DOM):
    return ExponentFunction.constant(dom, p)


def test_check_weight_rejects_non_positive():
    with pytest.raises(WeightError):
        check_weight(_s("x1"))


# --------------------------------------------------------------------------- cube functionals


@pytest.mark.parametrize("a", [Constant(2.0), PowerMeasure(0.3), VarNorm(0.3, DOM)])
def test_t_infty_is_one_for_monotone_functionals(a):
    assert t_infty_constant(a, DOM).value == pytest.approx(1.0, rel=1e-12)


def test_varnorm_matches_power_measure_for_constant_delta():
    from varsparse.grid import level_views

    for view in level_views(DOM):
        np.testing.assert_allclose(VarNorm(0.3, DOM).values(view), PowerMeasure(0.3).values(view), rtol=1e-9)


# --------------------------------------------------------------------------- A_p and A_{p,q}


def test_ap_unit_weight():
    assert ap_constant(constant(DOM, 1.0), _const_p(2.0)).value == pytest.approx(1.0, rel=1e-10)


def test_ap_power_weight_frozen():
    r = ap_constant(_s("abs(x1)^0.5"), _const_p(2.0))
    assert r.value == pytest.approx(1.7496290008857651, rel=1e-9)
    assert r.witness == "g0:k0:0"


def test_ap_brute_force_over_cubes():
    from varsparse.grid import enumerate_cubes

    dom = Domain(1, 0, 4)
    w = _s("abs(x1)^0.5", dom).values
    best = 0.0
    for q in enumerate_cubes(dom):
        sl = q.slices(dom.J)
        best = max(best, math.sqrt(np.mean(w[sl] ** 2)) * math.sqrt(np.mean(w[sl] ** -2)))
    assert ap_constant(_s("abs(x1)^0.5", dom), _const_p(2.0, dom)).value == pytest.approx(best, rel=1e-9)


def test_ap_divergence_detected_for_non_a2_power():
    Js = (6, 8, 10)
    bad = [ap_constant(_s("abs(x1)^1.5", Domain(1, 0, J)), _const_p(2.0, Domain(1, 0, J))).value for J in Js]
    good = [ap_constant(_s("abs(x1)^0.5", Domain(1, 0, J)), _const_p(2.0, Domain(1, 0, J))).value for J in Js]
    assert divergent(bad, Js)
    assert not divergent(good, Js)


def test_apq_duality():
    w = _s("abs(x1)^0.2")
    p, q = _const_p(2.0), _const_p(3.0)
    a = apq_constant(w, p, q).value
    b = apq_constant(1 / w, q.conjugate(), p.conjugate()).value
    assert a == pytest.approx(b, rel=1e-12)


def test_apq_unit_weight_variable_exponent_bounded():
    p = ExponentFunction.from_expression("2 + 0.3*sin(2*x1)", DOM)
    q = ExponentFunction.from_expression("3 + 0.3*cos(2*x1)", DOM)
    v = apq_constant(constant(DOM, 1.0), p, q).value
    assert 1.0 - 1e-9 <= v < 2.0
    assert apq_constant(constant(DOM, 1.0), _const_p(2.0), _const_p(3.0)).value == pytest.approx(1.0, rel=1e-9)


# --------------------------------------------------------------------------- bumps


def test_bump_trivial_case():
    one = constant(DOM, 1.0)
    assert bump_constant_power(one, one, _const_p(2.0), 2, 2, Constant(1.0), 0).value == pytest.approx(1.0, rel=1e-10)


def test_bump_power_weight_frozen():
    r = bump_constant_power(constant(DOM, 1.0), _s("abs(x1)^0.5"), _const_p(2.0), 2, 2, PowerMeasure(0.3), 1)
    assert r.value == pytest.approx(5.1859355605114485, rel=1e-9)
    assert r.witness == "g0:k1:0"


def test_bump_requires_bump_exponents():
    w = _s("abs(x1)^0.2")
    p = ExponentFunction.from_expression("2 + sin(x1)", DOM)
    with pytest.raises(WeightError):
        bump_constant_power(w, w, p, p.p_plus / p.p_minus, 4.0, Constant(1.0), 0)


def test_extremal_v_gives_constant_at_most_one():
    w = _s("abs(x1)^0.2")
    p = ExponentFunction.from_expression("2 + 0.25*sin(3*x1)", DOM)
    a = PowerMeasure(0.3)
    v = extremal_v(w, Power(p.scale(2.0)), a, 1)
    assert bump_constant_power(w, v, p, 2.0, 2.0, a, 1).value <= 1 + 1e-9


def test_extremal_v_gphi_bump_at_most_one():
    p = _const_p(2.0)
    E, _, _ = example1(p, 2.0)
    w = _s("abs(x1)^0.2")
    a = VarNorm(0.2, DOM)
    v = extremal_v(w, E, a, 1)
    A = Power(p.conjugate().scale(2.0))
    assert bump_constant_gphi(w, v, E, A, a, 1).value <= 1 + 1e-9


def test_bump_gphi_reduces_to_power():
    p = _const_p(2.0)
    w, v = _s("abs(x1)^0.2"), _s("abs(x1)^0.3")
    a = PowerMeasure(0.2)
    direct = bump_constant_power(w, v, p, 2.0, 2.0, a, 1).value
    gphi = bump_constant_gphi(w, v, Power(p.scale(2.0)), Power(p.conjugate().scale(2.0)), a, 1).value
    assert gphi == pytest.approx(direct, rel=1e-12)


# --------------------------------------------------------------------------- symbol norms


def test_lipschitz_examples():
    x = DOM.centers()[..., 0]
    b = GridFunction(DOM, ((x >= 0) & (x < 0.5)).astype(float))
    r = lipschitz_a_norm(b, Constant(1.0))
    assert r.value == 0.5 and r.witness == "g0:k0:64"
    assert lipschitz_a_norm(constant(DOM, 3.0), Constant(1.0)).value == 0.0
    lin = _s("x1")
    assert lipschitz_a_norm(lin, VarNorm(0.5, DOM)).value == pytest.approx(lipschitz_a_norm(lin, PowerMeasure(0.5)).value, rel=1e-9)


def test_bmo_reduces_to_classical():
    x = DOM.centers()[..., 0]
    b = GridFunction(DOM, ((x >= 0) & (x < 0.5)).astype(float))
    one = constant(DOM, 1.0)
    assert bmo_eta_delta_scan(b, one, 0.0).value == lipschitz_a_norm(b, Constant(1.0)).value
    assert bmo_eta_delta_norm(constant(DOM, 2.0), one, 0.3) == 0.0
    assert bmo_eta_delta_norm(_s("x1"), one, 0.5) == pytest.approx(0.35355339059321406, rel=1e-9)


def test_symbol_pointwise_bound_bounded_over_levels():
    vals = [symbol_pointwise_sweep(_s("abs(x1)^0.4", Domain(1, 0, J)), 0.4).value for J in (6, 8, 10)]
    assert not divergent(vals, (6, 8, 10))
    assert symbol_pointwise_sweep(constant(DOM, 1.0), 0.4).value == 0.0


@pytest.mark.parametrize("k", [1, 2])
def test_lipschitz_power_check_finite(k):
    r = lipschitz_power_check(_s("x1"), PowerMeasure(1.0), _const_p(2.0), k)
    assert 0 < r.value < 1


# --------------------------------------------------------------------------- openness


def test_openness_unit_weight():
    p, q = _const_p(2.0), _const_p(3.0)
    res = openness_exponents(constant(DOM, 1.0), p, q, cap=50)
    assert res.s < 0.51 and res.r < 0.67
    assert res.p_over_u_minus > 1 and res.qc_over_vc_minus > 1


def test_openness_power_weight():
    res = openness_exponents(_s("abs(x1)^0.2"), _const_p(2.0), _const_p(3.0), cap=50)
    assert 0.5 < res.s < 1 and 2 / 3 < res.r < 1
    assert res.ap_s <= 50 and res.ap_r <= 50
    assert res.p_over_u_minus > 1 and res.qc_over_vc_minus > 1


def test_openness_reports_failure_cleanly():
    with pytest.raises(WeightError):
        openness_exponents(_s("abs(x1)^0.2"), _const_p(2.0), _const_p(3.0), cap=1.0)


# --------------------------------------------------------------------------- divergence helper


@settings(max_examples=50, deadline=None)
@given(st.floats(0.1, 100), st.floats(1.0, 1.4))
def test_divergent_threshold(start, growth):
    Js = (6, 8, 10)
    assert not divergent([start, start * growth, start * growth**2], Js)
    assert divergent([start, start * 1.6, start * 1.6**2], Js)
