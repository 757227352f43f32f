import numpy as np
import pytest

from condiv import ExpressionError, parse_coefficient
from condiv.expr import to_source


def test_constant_literal():
    f = parse_coefficient("0.06")
    assert f(3.0) == 0.06
    assert f.is_constant


def test_affine_root():
    f = parse_coefficient("0.1*(2-x)")
    assert f(2.0) == 0.0
    assert f.tag == "affine"


def test_hand_evaluated_expression():
    f = parse_coefficient("exp(-x)+0.05")
    assert f(0.0) == pytest.approx(1.05, abs=0)


def test_precedence_and_power():
    f = parse_coefficient("1+2*3^2")
    assert f(0.0) == 19.0
    # right-associative power
    assert parse_coefficient("2^3^2")(0.0) == 512.0
    # per the grammar, unary minus binds before '^'
    assert parse_coefficient("-2^2")(0.0) == 4.0


def test_two_argument_functions():
    assert parse_coefficient("min2(x, 3)")(5.0) == 3.0
    assert parse_coefficient("max2(x, 3)")(5.0) == 5.0


def test_numbers_with_exponents():
    assert parse_coefficient("1.5e-2")(0.0) == 0.015
    assert parse_coefficient(".5")(0.0) == 0.5


def test_syntax_error_carries_offset():
    with pytest.raises(ExpressionError) as e:
        parse_coefficient("1 + $")
    assert e.value.offset == 4


def test_unknown_identifier():
    with pytest.raises(ExpressionError) as e:
        parse_coefficient("2*y")
    assert "unknown identifier" in str(e.value)
    assert e.value.offset == 2


def test_arity_mismatch():
    with pytest.raises(ExpressionError) as e:
        parse_coefficient("min2(x)")
    assert "argument" in str(e.value)
    with pytest.raises(ExpressionError):
        parse_coefficient("exp(x, 1)")


def test_trailing_garbage_rejected():
    with pytest.raises(ExpressionError):
        parse_coefficient("1+2 3")


def test_domain_problems_yield_non_finite_not_raise():
    f = parse_coefficient("log(x-1)")
    assert np.isnan(f(0.5))
    f2 = parse_coefficient("1/x")
    assert np.isinf(f2(0.0))


def test_vectorized_evaluation():
    f = parse_coefficient("sqrt(x)+1")
    xs = np.array([0.0, 1.0, 4.0])
    assert np.allclose(f(xs), [1.0, 2.0, 3.0], atol=0)


def test_constant_folding_through_functions():
    f = parse_coefficient("sqrt(0.03)")
    assert f.is_constant
    assert f.constant_value == pytest.approx(np.sqrt(0.03), abs=0)


def test_pretty_print_round_trip():
    rng = np.random.default_rng(7)
    sources = [
        "0.06", "0.1*(2-x)", "exp(-x)+0.05", "x^2-3*x/7+min2(x,2)",
        "sqrt(x+1)*max2(x, 0.5)-log(x+2)", "-(x-1)^3+2",
    ]
    xs = rng.uniform(0.0, 10.0, 100)
    for src in sources:
        f = parse_coefficient(src)
        f2 = parse_coefficient(to_source(f.tree))
        v1 = np.asarray(f(xs))
        v2 = np.asarray(f2(xs))
        assert np.array_equal(v1, v2), src


def test_determinism_bit_identical():
    f = parse_coefficient("exp(-x)*sqrt(x+0.1)/(1+x^2)")
    a = f(1.2345)
    b = f(1.2345)
    assert a == b
