"""Parser and evaluator for config expressions."""

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from varsparse.expr import (
    ExpressionDomainError,
    ExpressionError,
    ExpressionSyntaxError,
    compile_expression,
    evaluate,
    parse_expression,
    to_source,
)


@pytest.mark.parametrize(
    "src, point, expected",
    [
        ("2 + 1/log(e + abs(x1))", [0.0], 3.0),
        ("pi", [7.0], 3.141592653589793),
        ("pow(x1,2) + x2", [3.0, 4.0], 13.0),
        ("-2^2", [0.0], -4.0),
        ("2^3^2", [0.0], 512.0),
        ("min(3, x1, 2) + max(1, x1)", [5.0], 7.0),
        ("floor(-1.5) + cos(0) + sin(0)", [0.0], -1.0),
        ("exp(1)", [0.0], math.e),
    ],
)
def test_known_values(src, point, expected):
    expr = parse_expression(src, len(point))
    assert evaluate(expr, point) == expected


def test_variable_beyond_dimension():
    with pytest.raises(ExpressionSyntaxError, match="variable index exceeds dimension"):
        parse_expression("x3", 2)


def test_syntax_error_reports_offset():
    with pytest.raises(ExpressionSyntaxError) as info:
        parse_expression("min(2, 1 +)", 1)
    assert info.value.offset == 9


@pytest.mark.parametrize("src", ["", "foo(1)", "y", "1 +* 2", "(1", "pow(1)"])
def test_malformed_inputs_raise(src):
    with pytest.raises(ExpressionError):
        parse_expression(src, 1)


@pytest.mark.parametrize("src, point", [("log(x1)", [-1.0]), ("x1^(-1)", [0.0]), ("1/x1", [0.0])])
def test_domain_errors(src, point):
    with pytest.raises(ExpressionDomainError):
        evaluate(parse_expression(src, 1), point)


def test_compiled_matches_evaluate():
    expr = parse_expression("abs(x1 - x2)^0.3 + 2", 2)
    fn = compile_expression(expr)
    for pt in ([0.1, 0.7], [-3.0, 2.0], [1.0, 1.0]):
        assert fn(pt) == evaluate(expr, pt)


# --------------------------------------------------------------------------- round trip

_leaf = st.one_of(
    st.sampled_from(["x1", "x2", "e", "pi"]),
    st.floats(0, 100, allow_nan=False).map(repr),
)


def _expressions():
    return st.recursive(
        _leaf,
        lambda inner: st.one_of(
            st.tuples(inner, st.sampled_from(["+", "-", "*", "/", "^"]), inner).map(lambda t: f"({t[0]} {t[1]} {t[2]})"),
            inner.map(lambda s: f"-{s}"),
            st.tuples(st.sampled_from(["log", "exp", "abs", "sin", "cos", "floor"]), inner).map(lambda t: f"{t[0]}({t[1]})"),
            st.tuples(st.sampled_from(["min", "max", "pow"]), inner, inner).map(lambda t: f"{t[0]}({t[1]}, {t[2]})"),
        ),
        max_leaves=8,
    )


@settings(max_examples=200, deadline=None)
@given(_expressions())
def test_print_parse_round_trip(src):
    once = parse_expression(src, 2)
    twice = parse_expression(to_source(once), 2)
    assert twice == once
    assert to_source(twice) == to_source(once)


@settings(max_examples=100, deadline=None)
@given(_expressions(), st.floats(-3, 3), st.floats(-3, 3))
def test_evaluation_is_pure(src, a, b):
    expr = parse_expression(src, 2)
    try:
        first = evaluate(expr, [a, b])
    except (ExpressionDomainError, OverflowError):
        return
    second = evaluate(parse_expression(to_source(expr), 2), [a, b])
    assert math.isnan(first) and math.isnan(second) or first == second
