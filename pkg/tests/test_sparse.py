"""Stopping families, exact sparsity counting, augmentation and sparse operators."""

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from varsparse.exponent import ExponentFunction
from varsparse.expr import parse_expression
from varsparse.grid import Domain, DyadicCube, GridFunction, constant, integrate, root_cube, sample
from varsparse.sparse import (
    SparseError,
    SparseFamily,
    apply_A_eta_iter,
    apply_Amh,
    apply_Amh_sum,
    apply_AS,
    apply_Ibeta,
    chain_bound_ratio,
    cz_sparse,
    cz_sparse_grid,
    grid_roots,
    oscillation_augment,
    verify_oscillation_bound,
    verify_prop31,
    verify_sparse,
)

DOM = Domain(1, 0, 4)
X = DOM.centers()[..., 0]
ROOT = DyadicCube(0, (16,), (0,))  # [0, 1)


def _family(*cubes, dom=DOM):
    return SparseFamily(dom, cubes[0].shift, cubes)


def _chi(lo, hi, dom=DOM):
    x = dom.centers()[..., 0]
    return GridFunction(dom, ((x >= lo) & (x < hi)).astype(float))


# --------------------------------------------------------------------------- construction


def test_cz_constant_function_keeps_root_only():
    assert cz_sparse(constant(DOM, 1.0), ROOT).cubes == (ROOT,)


def test_cz_hand_traced_spine():
    S = cz_sparse(_chi(0, 1 / 16), ROOT)
    assert [q.id for q in S] == ["g0:k0:16", "g0:k-1:16", "g0:k-2:16", "g0:k-3:16", "g0:k-4:16"]
    rep = verify_sparse(S)
    assert rep.min_ratio == Fraction(1, 2) and rep.disjoint


def test_cz_larger_threshold_is_coarser():
    S = cz_sparse(_chi(0, 1 / 16), ROOT, threshold=4.0)
    assert [q.id for q in S] == ["g0:k0:16", "g0:k-2:16", "g0:k-4:16"]
    assert verify_sparse(S).min_ratio == Fraction(3, 4)


def test_cz_rejects_zero_and_small_threshold():
    with pytest.raises(SparseError):
        cz_sparse(constant(DOM, 0.0), ROOT)
    with pytest.raises(SparseError):
        cz_sparse(constant(DOM, 1.0), ROOT, threshold=1.5)


def test_verify_sparse_examples():
    assert verify_sparse([ROOT], DOM).min_ratio == 1
    chain = [DyadicCube(-k, (16,), (0,)) for k in range(5)]
    assert verify_sparse(chain, DOM).min_ratio == Fraction(1, 2)
    packed = [ROOT, DyadicCube(-1, (16,), (0,)), DyadicCube(-1, (24,), (0,))]
    assert not verify_sparse(packed, DOM).sparse
    assert not verify_sparse([ROOT, ROOT], DOM).disjoint


def test_verify_sparse_rejects_mixed_grids():
    with pytest.raises(SparseError):
        verify_sparse([ROOT, DyadicCube(-1, (1,), (1,))], DOM)


def test_family_json_round_trip():
    S = cz_sparse_grid(sample(parse_expression("abs(x1)^(-0.5)", 1), DOM))
    assert SparseFamily.from_json(S.to_json()) == S


def test_grid_roots_cover_box():
    for sh in ((0,), (1,), (2,)):
        roots = grid_roots(DOM, sh)
        cover = np.zeros(DOM.shape, dtype=int)
        for q in roots:
            cover[q.slices(DOM.J)] += 1
        assert cover.max() == 1 and cover.min() == 1


_funcs = st.lists(st.floats(0, 100, allow_nan=False), min_size=64, max_size=64).filter(lambda v: sum(v) > 0)


@settings(max_examples=60, deadline=None)
@given(_funcs, st.sampled_from([0, 1, 2]), st.sampled_from([2.0, 3.0, 4.0]))
def test_cz_families_are_sparse(vals, code, threshold):
    dom = Domain(1, 1, 4)
    S = cz_sparse_grid(GridFunction(dom, np.array(vals)), (code,), threshold)
    rep = verify_sparse(S)
    assert rep.disjoint
    assert rep.min_ratio >= 1 - Fraction(1) / Fraction(threshold).limit_denominator()


# --------------------------------------------------------------------------- augmentation


def test_augment_constant_symbol_is_noop():
    S = cz_sparse(_chi(0, 1 / 16), ROOT)
    assert oscillation_augment(S, constant(DOM, 5.0)) == S


def test_augment_half_indicator_is_noop():
    S = _family(ROOT)
    assert oscillation_augment(S, _chi(0, 0.5)) == S


def test_augment_linear_symbol():
    # <|x - 1/2|> is 1/4 on [0,1) and no dyadic subcube exceeds 1/2
    S = _family(ROOT)
    b = sample(parse_expression("x1", 1), DOM)
    assert oscillation_augment(S, b) == S
    c, wit = verify_oscillation_bound(S, b)
    assert c == pytest.approx(1.875, rel=1e-14) and wit == ROOT.id


def test_oscillation_bound_constant_symbol():
    assert verify_oscillation_bound(_family(ROOT), constant(DOM, 2.0)) == (0.0, "")


def test_oscillation_bound_stable_under_refinement():
    vals = []
    for J in (6, 8, 10):
        dom = Domain(1, 0, J)
        root = DyadicCube(0, (2**J,), (0,))
        b = sample(parse_expression("x1", 1), dom)
        vals.append(verify_oscillation_bound(oscillation_augment(SparseFamily(dom, (0,), (root,)), b), b)[0])
    assert max(vals) / min(vals) <= 2


def test_augment_random_step_symbol_stays_superset():
    rng = np.random.default_rng(3)
    b = GridFunction(DOM, np.repeat(rng.normal(size=8), 4))
    S = cz_sparse_grid(abs(b) + 0.1)
    T = oscillation_augment(S, b)
    assert set(S.cubes) <= set(T.cubes)
    assert math.isfinite(verify_oscillation_bound(T, b)[0])


# --------------------------------------------------------------------------- operators


def test_AS_root_on_constant():
    out = apply_AS(_family(ROOT), constant(DOM, 1.0))
    assert np.array_equal(out.values, _chi(0, 1).values)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_AS_linear_and_self_adjoint(seed):
    rng = np.random.default_rng(seed)
    f = GridFunction(DOM, rng.normal(size=DOM.shape))
    g = GridFunction(DOM, rng.normal(size=DOM.shape))
    S = cz_sparse_grid(abs(f))
    np.testing.assert_allclose(apply_AS(S, f + g).values, (apply_AS(S, f) + apply_AS(S, g)).values, atol=1e-12)
    lhs, rhs = integrate(g * apply_AS(S, f)), integrate(f * apply_AS(S, g))
    assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(lhs))


def test_AS_monotone_in_family():
    f = abs(sample(parse_expression("sin(7*x1)", 1), DOM))
    small = _family(ROOT)
    big = _family(ROOT, DyadicCube(-2, (16,), (0,)), DyadicCube(-3, (28,), (0,)))
    assert np.all(apply_AS(big, f).values >= apply_AS(small, f).values)


def test_Amh_reductions():
    f = abs(sample(parse_expression("1 + x1^2", 1), DOM))
    b = sample(parse_expression("x1", 1), DOM)
    S = cz_sparse_grid(f)
    assert np.array_equal(apply_Amh(S, b, f, 0, 0).values, apply_AS(S, f).values)
    for m, h in [(1, 0), (1, 1), (2, 1)]:
        assert np.all(apply_Amh(S, constant(DOM, 3.0), f, m, h).values == 0)
    with pytest.raises(SparseError):
        apply_Amh(S, b, f, 1, 2)


def test_Amh_hand_formula():
    b = sample(parse_expression("x1", 1), DOM)
    out = apply_Amh(_family(ROOT), b, constant(DOM, 1.0), 1, 0)
    np.testing.assert_allclose(out.values, np.where(X >= 0, np.abs(X - 0.5), 0.0), atol=1e-15)


def test_Amh_sum_is_sum_over_h():
    f = abs(sample(parse_expression("cos(3*x1)", 1), DOM)) + 0.1
    b = sample(parse_expression("abs(x1)^0.5", 1), DOM)
    S = cz_sparse_grid(f)
    total = sum(apply_Amh(S, b, f, 2, h, 0.5).values for h in range(3))
    np.testing.assert_allclose(apply_Amh_sum(S, b, f, 2, 0.5).values, total, rtol=1e-15)


def test_Ibeta_matches_fractional_sparse_operator():
    f = abs(sample(parse_expression("sin(5*x1)", 1), DOM)) + 0.01
    S = cz_sparse_grid(f)
    alpha = 0.5
    beta = ExponentFunction.constant(DOM, 1 / alpha)
    np.testing.assert_allclose(apply_Ibeta(S, beta, f).values, apply_Amh(S, constant(DOM, 0.0), f, 0, 0, alpha).values, rtol=1e-9)


def test_Ibeta_infinite_exponent_is_AS():
    f = abs(sample(parse_expression("x1 + 2", 1), DOM))
    S = cz_sparse_grid(f)
    beta = ExponentFunction.constant(DOM, math.inf)
    np.testing.assert_allclose(apply_Ibeta(S, beta, f).values, apply_AS(S, f).values, rtol=1e-12)


def test_A_eta_iterates():
    f = abs(sample(parse_expression("1 + sin(x1)", 1), DOM))
    eta = abs(sample(parse_expression("2 + x1", 1), DOM))
    S = _family(ROOT, DyadicCube(-2, (20,), (0,)))
    assert apply_A_eta_iter(S, eta, f, 0) == f
    np.testing.assert_array_equal(apply_A_eta_iter(S, constant(DOM, 1.0), f, 1).values, apply_AS(S, f).values)
    # unrolled double sum over the two cubes
    once = np.zeros(DOM.shape)
    for q in S:
        once[q.slices(DOM.J)] += f.values[q.slices(DOM.J)].mean()
    once *= eta.values
    twice = np.zeros(DOM.shape)
    for q in S:
        twice[q.slices(DOM.J)] += once[q.slices(DOM.J)].mean()
    twice *= eta.values
    np.testing.assert_allclose(apply_A_eta_iter(S, eta, f, 2).values, twice, rtol=1e-14)
    out = apply_A_eta_iter(S, eta, f, 3).values
    assert np.all(out >= 0) and np.all(out[X < 0] == 0)


def test_chain_bound_on_three_cube_chain():
    S = _family(ROOT, DyadicCube(-1, (16,), (0,)), DyadicCube(-2, (16,), (0,)))
    eta = abs(sample(parse_expression("1 + x1^2", 1), DOM))
    for k in (1, 2, 3):
        assert chain_bound_ratio(S, eta, ROOT, k) <= 1 + 1e-12


def test_prop31_constant_symbol_and_linear_symbol():
    f = constant(DOM, 1.0)
    one = constant(DOM, 1.0)
    S = cz_sparse_grid(f)
    assert verify_prop31(S, constant(DOM, 2.0), one, 0.0, f, 1).constant == 0.0
    consts = []
    for J in (6, 8, 10):
        dom = Domain(1, 0, J)
        b = sample(parse_expression("x1", 1), dom)
        g = constant(dom, 1.0)
        consts.append([verify_prop31(cz_sparse_grid(g), b, g, 0.0, g, k).constant for k in (1, 2)])
    for k in range(2):
        col = [c[k] for c in consts]
        assert all(math.isfinite(c) and c > 0 for c in col)
        assert max(col) / min(col) <= 2
