"""Generalized Phi-functions, modulars, Luxemburg norms, conjugates and condition F."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from varsparse.exponent import ExponentFunction
from varsparse.gphi import (
    GPhiError,
    LinearLog,
    Numeric,
    Power,
    PowerLog,
    check_condition_F,
    conjugate_gphi,
    example1,
    example2,
    inverse_gphi,
    luxemburg_norm,
    modular,
    weighted_norm,
)
from varsparse.grid import Domain, GridFunction, constant

UNIT = Domain(1, -1, 4)  # [-1/2, 1/2), unit measure


def _split(dom, left, right):
    x = dom.centers()[..., 0]
    return np.where(x < 0, left, right)


def _split_exponent(dom):
    return ExponentFunction.from_grid(GridFunction(dom, _split(dom, 2.0, 4.0)))


# --------------------------------------------------------------------------- modular


def test_modular_examples():
    assert modular(Power(ExponentFunction.constant(UNIT, 2.0)), constant(UNIT, 1.0), 1.0) == 1.0
    assert modular(Power(_split_exponent(UNIT)), constant(UNIT, 2.0), 2.0) == 1.0
    assert modular(LinearLog(), constant(UNIT, 1.0), 1.0) == pytest.approx(1.3132616875182228, rel=1e-15)


def test_modular_infinite_branch():
    p = ExponentFunction.from_grid(GridFunction(UNIT, _split(UNIT, 2.0, math.inf)))
    f = constant(UNIT, 1.0)
    assert modular(Power(p), f, 0.5) == math.inf
    assert modular(Power(p), f, 1.0) == 0.5


# --------------------------------------------------------------------------- norms


def test_norm_examples():
    dom = Domain(1, 0, 3)
    chi = GridFunction(dom, (dom.centers()[..., 0] >= 0).astype(float))
    assert luxemburg_norm(Power(ExponentFunction.constant(dom, 2.0)), chi) == pytest.approx(1.0, rel=1e-10)
    f = GridFunction(UNIT, _split(UNIT, 2.0, 0.0))
    assert luxemburg_norm(Power(_split_exponent(UNIT)), f) == pytest.approx(math.sqrt(2), rel=1e-10)
    assert luxemburg_norm(Power(2.0), GridFunction(dom, np.zeros(dom.shape))) == 0.0


@pytest.mark.parametrize(
    "psi",
    [
        Power(1.0),
        Power(3.5),
        Power(math.inf),
        PowerLog(2.0, 0.0),
    ],
)
@pytest.mark.parametrize("c", [0.01, 1.0, 123.0])
def test_unit_modular_law(psi, c):
    assert luxemburg_norm(psi, constant(UNIT, c)) == pytest.approx(c, rel=1e-9)


def test_infinite_exponent_gives_sup_norm():
    dom = Domain(1, 0, 4)
    f = GridFunction(dom, np.linspace(-3, 2, dom.cell_count))
    assert luxemburg_norm(Power(math.inf), f) == pytest.approx(3.0, rel=1e-10)


def test_weighted_norm():
    dom = Domain(1, 0, 4)
    rng = np.random.default_rng(7)
    f = GridFunction(dom, rng.normal(size=dom.shape))
    w = GridFunction(dom, rng.uniform(0.5, 2, size=dom.shape))
    P = Power(ExponentFunction.from_expression("2 + sin(x1)", dom))
    assert weighted_norm(P, f, constant(dom, 1.0)) == luxemburg_norm(P, f)
    assert weighted_norm(P, f, constant(dom, 3.0)) == pytest.approx(3 * luxemburg_norm(P, f), rel=1e-9)
    assert weighted_norm(P, f, w) == luxemburg_norm(P, f * w)


_steps = st.lists(st.floats(-100, 100, allow_nan=False), min_size=16, max_size=16).filter(lambda v: any(abs(a) > 1e-3 for a in v))


@settings(max_examples=60, deadline=None)
@given(_steps, st.floats(1.0, 8.0), st.floats(0.0, 3.0))
def test_norm_modular_duality(vals, p0, amp):
    dom = Domain(1, 0, 3)
    f = GridFunction(dom, np.array(vals))
    P = Power(ExponentFunction.from_expression(f"{p0} + {amp}*abs(sin(2*x1))", dom))
    n = luxemburg_norm(P, f)
    assert modular(P, f, n) <= 1 + 1e-8
    below = modular(P, f, n * (1 - 1e-6))
    assert below > 1 or not math.isfinite(below)


@settings(max_examples=60, deadline=None)
@given(_steps, st.floats(1.0, 8.0), st.floats(1e-3, 1e3))
def test_power_norm_homogeneous(vals, p0, c):
    dom = Domain(1, 0, 3)
    f = GridFunction(dom, np.array(vals))
    P = Power(ExponentFunction.from_expression(f"{p0} + 0.5*cos(x1)", dom))
    assert luxemburg_norm(P, c * f) == pytest.approx(c * luxemburg_norm(P, f), rel=1e-9)


def test_power_rejects_exponent_below_one():
    with pytest.raises(GPhiError):
        Power(0.5)


# --------------------------------------------------------------------------- conjugates and inverses


def test_power_conjugate_closed_form():
    c = conjugate_gphi(Power(2.0))
    assert c(2.0) == 1.0
    assert c(3.0) == 2.25


def test_linear_conjugate():
    c = conjugate_gphi(Power(1.0))
    assert c(0.5) == 0.0 and c(1.0) == 0.0
    assert c(1.5) == math.inf


def test_linearlog_conjugate_satisfies_young():
    psi = LinearLog()
    star = conjugate_gphi(psi)
    assert isinstance(star, Numeric)
    t = np.geomspace(1e-3, 1e2, 100)
    T, U = np.meshgrid(t, t)
    assert (T * U - psi(T) - star(U)).max() <= 1e-7


def test_inverse_examples():
    assert inverse_gphi(Power(2.0), None, 4.0) == pytest.approx(2.0, rel=1e-10)
    assert inverse_gphi(Power(2.0), None, 0.0) == 0.0
    assert inverse_gphi(LinearLog(), None, math.log(math.e + 1)) == pytest.approx(1.0, rel=1e-10)


# --------------------------------------------------------------------------- condition F

DOM = Domain(1, 0, 3)


def test_condition_F_power_identity():
    rep = check_condition_F(Power(2.0), Power(2.0), Power(1.0), DOM)
    assert rep.c2 == pytest.approx(1.0, rel=1e-12)
    assert rep.c1 == pytest.approx(1.0, rel=1e-9)


def test_condition_F_example1_frozen():
    A, B, D = example1(ExponentFunction.constant(DOM, 2.0), 2.0)
    rep = check_condition_F(A, B, D, DOM)
    assert (rep.c1, rep.c2, rep.c3) == pytest.approx((1.0666864841473276, 3.5580501067667396, 0.6483348715146077), rel=1e-6)
    assert rep.c1_witness == "g0:k1:0"


def test_condition_F_example2_frozen():
    A, B, D = example2(ExponentFunction.constant(DOM, 2.0), 1.25, 3.0, 1.0)
    rep = check_condition_F(A, B, D, DOM)
    assert (rep.c1, rep.c2, rep.c3) == pytest.approx((1.0528278010782623, 2.7394710058582676, 0.6022926983128524), rel=1e-6)


def test_example2_rejects_sub_linear_alpha():
    with pytest.raises(GPhiError):
        example2(ExponentFunction.constant(DOM, 2.0), 1.25, 1.0, 1.0)
