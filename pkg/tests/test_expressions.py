import numpy as np
import pytest

from normalgeo.expressions import Expression, ExpressionError, parse_expression
from normalgeo.jets import Jet


def test_basic_arithmetic():
    e = Expression("2*x + y^2 - 1/4", 2)
    assert e((3.0, 2.0)) == pytest.approx(2 * 3 + 4 - 0.25)


def test_pow_forms_agree():
    a = Expression("x^3", 1)
    b = Expression("x**3", 1)
    c = Expression("pow(x, 3)", 1)
    for v in (0.7, -1.3, 2.0):
        assert a((v,)) == b((v,)) == c((v,))


def test_functions_and_constants():
    e = Expression("sin(pi/2) + cos(0) + exp(0) + log(e) + sqrt(4)", 1)
    assert e((0.0,)) == pytest.approx(1 + 1 + 1 + 1 + 2)
    assert Expression("sinh(x) + cosh(x)", 1)((0.3,)) == pytest.approx(np.exp(0.3))


def test_variable_aliases_and_indices():
    e = Expression("x + 2*y + 3*z + 4*w", 4)
    f = Expression("x1 + 2*x2 + 3*x3 + 4*x4", 4)
    pt = (1.0, 2.0, 3.0, 4.0)
    assert e(pt) == f(pt) == pytest.approx(1 + 4 + 9 + 16)


def test_unary_minus_and_precedence():
    assert Expression("-x^2", 1)((3.0,)) == -9.0  # power binds tighter
    assert Expression("(-x)^2", 1)((3.0,)) == 9.0
    assert Expression("2^3^2", 1)((0.0,)) == 512.0  # right associative


def test_vectorized_evaluation():
    e = Expression("exp(2*x)", 2)
    xs = np.linspace(0, 1, 7)
    out = e((xs, xs))
    assert np.allclose(out, np.exp(2 * xs))


def test_parse_error_carries_position():
    with pytest.raises(ExpressionError) as err:
        parse_expression("sin(x", 1)
    assert "line 1" in str(err.value)
    with pytest.raises(ExpressionError, match="column 5"):
        parse_expression("1 + £", 1)


def test_unknown_name_rejected():
    with pytest.raises(ExpressionError, match="unknown"):
        parse_expression("foo(x)", 1)
    with pytest.raises(ExpressionError, match="exceeds dimension"):
        parse_expression("x3", 2)


def test_jet_evaluation_matches_value():
    e = Expression("sin(x)*exp(y)", 2)
    jet = e.jet(np.array([0.4, -0.2]), 2)
    assert isinstance(jet, Jet)
    assert jet.value == pytest.approx(np.sin(0.4) * np.exp(-0.2))
    grad = jet.gradient()
    assert grad[0] == pytest.approx(np.cos(0.4) * np.exp(-0.2))
    assert grad[1] == pytest.approx(np.sin(0.4) * np.exp(-0.2))
