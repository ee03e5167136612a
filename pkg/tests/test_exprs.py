import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spacelike.errors import EvalError, ExprSyntaxError
from spacelike.exprs import differentiate, eval_expr, parse_expr


def test_parse_free_vars():
    e = parse_expr("2*x1 + sin(t)")
    assert e.free_vars() == {"x1", "t"}


def test_power_eval():
    assert eval_expr(parse_expr("x1^2"), {"x1": 3.0}) == 9.0


def test_incomplete_expression_offset():
    with pytest.raises(ExprSyntaxError) as exc:
        parse_expr("1+")
    assert exc.value.offset == 2


def test_unknown_function():
    with pytest.raises(ExprSyntaxError, match="unknown function 'sinh'"):
        parse_expr("sinh(x)")


def test_exp_identity():
    assert eval_expr(parse_expr("exp(0)"), {}) == 1.0


def test_log_domain_error_reports_bindings():
    with pytest.raises(EvalError, match="x1"):
        eval_expr(parse_expr("log(x1)"), {"x1": -1.0})


def test_sqrt():
    assert eval_expr(parse_expr("sqrt(1 - x1)"), {"x1": 0.75}) == 0.5


def test_sqrt_domain_error():
    with pytest.raises(EvalError, match="sqrt"):
        eval_expr(parse_expr("sqrt(x)"), {"x": -0.5})


def test_unbound_variable():
    with pytest.raises(EvalError, match="unbound"):
        eval_expr(parse_expr("x + y"), {"x": 1.0})


def test_diff_product_rule():
    d = differentiate(parse_expr("x1*x1"), "x1")
    for v in (-2.0, -0.5, 0.0, 1.5, 5.0):
        assert eval_expr(d, {"x1": v}) == pytest.approx(2 * v, abs=1e-14)


def test_diff_sin_at_zero():
    d = differentiate(parse_expr("sin(t)"), "t")
    assert eval_expr(d, {"t": 0.0}) == 1.0


def test_diff_absent_variable_is_zero():
    d = differentiate(parse_expr("exp(x2)"), "x1")
    for v in (0.0, 1.0, -3.0):
        assert eval_expr(d, {"x2": v}) == 0.0


def test_pi_constant():
    assert eval_expr(parse_expr("cos(pi)"), {}) == pytest.approx(-1.0)


def test_integer_exponent_required():
    with pytest.raises(ExprSyntaxError):
        parse_expr("x^2.5")


def test_negative_exponent():
    assert eval_expr(parse_expr("x^-2"), {"x": 2.0}) == 0.25


def test_vectorized_eval_matches_scalar():
    e = parse_expr("sin(x)*exp(y) - x/2")
    xs = np.linspace(-1, 1, 7)
    ys = np.linspace(0, 2, 7)
    batch = eval_expr(e, {"x": xs, "y": ys})
    for k in range(7):
        assert batch[k] == eval_expr(e, {"x": xs[k], "y": ys[k]})


def test_eval_deterministic():
    e = parse_expr("sin(2*x) + cos(x)^3 / (1 + x^2)")
    a = eval_expr(e, {"x": 0.731})
    b = eval_expr(e, {"x": 0.731})
    assert a == b  # bit-identical


# -- hypothesis properties --------------------------------------------------

_VARS = ("x1", "x2", "t")


def _poly_exprs(depth):
    leaf = st.one_of(
        st.floats(min_value=-2, max_value=2, allow_nan=False).map(lambda v: f"{v:.4f}"),
        st.sampled_from(_VARS),
    )
    if depth == 0:
        return leaf
    sub = _poly_exprs(depth - 1)
    return st.one_of(
        leaf,
        st.tuples(sub, sub).map(lambda ab: f"({ab[0]} + {ab[1]})"),
        st.tuples(sub, sub).map(lambda ab: f"({ab[0]} - {ab[1]})"),
        st.tuples(sub, sub).map(lambda ab: f"({ab[0]})*({ab[1]})"),
        sub.map(lambda a: f"({a})^2"),
    )


@settings(max_examples=60, deadline=None)
@given(text=_poly_exprs(3), data=st.data())
def test_symbolic_derivative_matches_central_difference(text, data):
    expr = parse_expr(text)
    var = data.draw(st.sampled_from(_VARS))
    point = {v: data.draw(st.floats(min_value=-1.5, max_value=1.5, allow_nan=False)) for v in _VARS}
    d = differentiate(expr, var)
    exact = float(eval_expr(d, point))
    step = 1e-5

    def f(x):
        ctx = dict(point)
        ctx[var] = x
        return float(eval_expr(expr, ctx))

    approx = (f(point[var] + step) - f(point[var] - step)) / (2 * step)
    value = abs(f(point[var]))
    assert abs(exact - approx) <= 1e-6 * (1.0 + value) + 1e-6 * abs(exact)


_FULL_FUNCS = ("sin", "cos", "exp")


def _full_exprs(depth):
    leaf = st.one_of(
        st.floats(min_value=-2, max_value=2, allow_nan=False).map(lambda v: f"{v:.4f}"),
        st.sampled_from(_VARS),
    )
    if depth == 0:
        return leaf
    sub = _full_exprs(depth - 1)
    return st.one_of(
        leaf,
        st.tuples(sub, sub).map(lambda ab: f"({ab[0]} + {ab[1]})"),
        st.tuples(sub, sub).map(lambda ab: f"({ab[0]})*({ab[1]})"),
        st.tuples(sub, sub).map(lambda ab: f"({ab[0]}) / (2 + ({ab[1]})^2)"),
        st.tuples(st.sampled_from(_FULL_FUNCS), sub).map(lambda fa: f"{fa[0]}({fa[1]})"),
        sub.map(lambda a: f"-({a})"),
    )


@settings(max_examples=60, deadline=None)
@given(text=_full_exprs(3), data=st.data())
def test_print_parse_roundtrip(text, data):
    expr = parse_expr(text)
    again = parse_expr(str(expr))
    rng = np.random.default_rng(data.draw(st.integers(min_value=0, max_value=2**32 - 1)))
    pts = rng.uniform(-2.0, 2.0, size=(100, len(_VARS)))
    ctx = {v: pts[:, i] for i, v in enumerate(_VARS)}
    a = np.asarray(eval_expr(expr, ctx), dtype=float)
    b = np.asarray(eval_expr(again, ctx), dtype=float)
    assert np.array_equal(a, b, equal_nan=True)
