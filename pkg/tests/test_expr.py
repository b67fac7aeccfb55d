import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from shockasym import expr
from shockasym.expr import EvaluationError, ExpressionError


def ev(text, **bindings):
    return expr.evaluate(expr.parse(text), bindings)


class TestParseEvaluate:
    def test_power_quotient(self):
        assert ev("u^2/2", u=3.0) == pytest.approx(4.5, abs=0)

    def test_log_mix(self):
        assert ev("ln(u+v)-u/(u+v)", u=1.0, v=1.0) == pytest.approx(
            math.log(2.0) - 0.5, rel=1e-15)

    def test_trailing_operator_position(self):
        with pytest.raises(ExpressionError) as err:
            expr.parse("u +")
        assert err.value.offset == 3

    def test_empty(self):
        with pytest.raises(ExpressionError):
            expr.parse("   ")

    def test_unknown_identifier(self):
        with pytest.raises(ExpressionError, match="unknown identifier 'w'"):
            expr.parse("w+1")

    def test_exp_at_zero(self):
        assert ev("exp(u)", u=0.0) == 1.0

    def test_division_by_zero(self):
        with pytest.raises(EvaluationError, match="division by zero"):
            ev("1/(u-v)", u=2.0, v=2.0)

    def test_linear(self):
        assert ev("2*u+v", u=1.5, v=1.0) == 4.0

    def test_unbound_variable(self):
        with pytest.raises(EvaluationError, match="unbound variable"):
            ev("u+v", u=1.0)

    def test_ln_domain(self):
        with pytest.raises(EvaluationError, match="ln of nonpositive"):
            ev("ln(u)", u=-1.0)

    def test_sqrt_domain(self):
        with pytest.raises(EvaluationError, match="sqrt of negative"):
            ev("sqrt(u)", u=-4.0)

    def test_precedence(self):
        # power binds over unary minus over product over sum
        assert ev("-u^2", u=3.0) == -9.0
        assert ev("2*u+v*u", u=2.0, v=3.0) == 10.0
        assert ev("1-2-3") == -4.0
        assert ev("8/4/2") == 1.0

    def test_integer_exponent_only(self):
        with pytest.raises(ExpressionError, match="integer"):
            expr.parse("u^2.5")
        with pytest.raises(ExpressionError, match="integer exponent required"):
            expr.parse("u^-2")

    def test_parentheses(self):
        assert ev("(1+2)*3") == 9.0

    def test_scientific_literals(self):
        assert ev("1.5e-3+x", x=0.0) == pytest.approx(1.5e-3, abs=0)


class TestDifferentiate:
    def test_power_rule(self):
        d = expr.differentiate(expr.parse("u^2/2"), "u")
        assert expr.evaluate(d, {"u": 3.0}) == pytest.approx(3.0, abs=1e-15)

    def test_quotient_rule(self):
        d = expr.differentiate(expr.parse("-1/(u+v)"), "v")
        assert expr.evaluate(d, {"u": 1.0, "v": 1.0}) == pytest.approx(0.25, abs=1e-15)

    def test_independent_variable(self):
        d = expr.differentiate(expr.parse("v"), "u")
        assert d == expr.Const(0.0)

    def test_bad_variable(self):
        with pytest.raises(ValueError):
            expr.differentiate(expr.parse("u"), "t")

    def test_chain_rules(self):
        cases = [
            ("exp(2*u)", lambda u: 2 * math.exp(2 * u)),
            ("ln(u)", lambda u: 1 / u),
            ("sin(u)", math.cos),
            ("cos(u)", lambda u: -math.sin(u)),
            ("sqrt(u)", lambda u: 0.5 / math.sqrt(u)),
        ]
        for text, want in cases:
            d = expr.differentiate(expr.parse(text), "u")
            for u in (0.3, 1.1, 2.7):
                assert expr.evaluate(d, {"u": u}) == pytest.approx(want(u), rel=1e-12)


# random ASTs for property checks ------------------------------------------

def _random_ast(rng, depth):
    roll = rng.random()
    if depth <= 0 or roll < 0.25:
        if rng.random() < 0.5:
            return expr.Const(round(rng.uniform(0.2, 2.0), 3))
        return expr.Var(rng.choice(("u", "v", "x")))
    if roll < 0.70:
        op = rng.choice(("+", "-", "*", "/"))
        return expr.BinOp(op, _random_ast(rng, depth - 1), _random_ast(rng, depth - 1))
    if roll < 0.80:
        return expr.Neg(_random_ast(rng, depth - 1))
    if roll < 0.90:
        return expr.Pow(_random_ast(rng, depth - 1), int(rng.integers(0, 4)))
    fn = rng.choice(("exp", "ln", "sin", "cos", "sqrt"))
    return expr.Call(fn, _random_ast(rng, depth - 1))


def _safe_point(ast, rng):
    """Draw a point where the expression and nearby offsets evaluate tamely."""
    for _ in range(40):
        point = {name: float(rng.uniform(0.4, 1.8)) for name in ("u", "v", "x")}
        try:
            vals = []
            for var in ("u", "v", "x"):
                for h in (-1e-6, 0.0, 1e-6):
                    shifted = dict(point)
                    shifted[var] += h
                    vals.append(expr.evaluate(ast, shifted))
            if all(abs(v) < 1e3 for v in vals):
                return point
        except (EvaluationError, OverflowError):
            continue
    return None


def derivative_vs_fd_pairs(n_pairs: int, seed: int = 20240817) -> float:
    """Worst relative mismatch between symbolic and central-difference
    derivatives over randomly generated expression/point pairs."""
    rng = np.random.default_rng(seed)

    class _Rng:
        random = staticmethod(rng.random)
        uniform = staticmethod(rng.uniform)
        integers = staticmethod(rng.integers)

        @staticmethod
        def choice(seq):
            return seq[int(rng.integers(0, len(seq)))]

    worst = 0.0
    produced = 0
    while produced < n_pairs:
        ast = _random_ast(_Rng, 3)
        point = _safe_point(ast, _Rng)
        if point is None:
            continue
        var = _Rng.choice(("u", "v", "x"))
        d = expr.differentiate(ast, var)
        try:
            sym = expr.evaluate(d, point)
        except EvaluationError:
            continue
        hi = dict(point)
        lo = dict(point)
        hi[var] += 1e-6
        lo[var] -= 1e-6
        try:
            fd = (expr.evaluate(ast, hi) - expr.evaluate(ast, lo)) / 2e-6
        except EvaluationError:
            continue
        worst = max(worst, abs(sym - fd) / (1.0 + abs(sym)))
        produced += 1
    return worst


def test_derivative_matches_finite_difference():
    assert derivative_vs_fd_pairs(1000) <= 1e-7


# hypothesis strategies for round-trip -------------------------------------

_leaf = st.one_of(
    st.floats(min_value=0.1, max_value=4.0).map(lambda v: expr.Const(round(v, 4))),
    st.sampled_from(["u", "v", "x"]).map(expr.Var),
)


def _extend(children):
    return st.one_of(
        st.tuples(st.sampled_from("+-*/"), children, children).map(
            lambda t: expr.BinOp(t[0], t[1], t[2])),
        children.map(expr.Neg),
        st.tuples(children, st.integers(0, 3)).map(lambda t: expr.Pow(t[0], t[1])),
        st.tuples(st.sampled_from(["exp", "sin", "cos"]), children).map(
            lambda t: expr.Call(t[0], t[1])),
    )


_ast = st.recursive(_leaf, _extend, max_leaves=12)


@given(_ast)
def test_render_reparse_identical_values(ast):
    text = expr.render(ast)
    back = expr.parse(text)
    rng = np.random.default_rng(7)
    checked = 0
    for _ in range(100):
        point = {name: float(rng.uniform(0.3, 2.0)) for name in ("u", "v", "x")}
        try:
            a = expr.evaluate(ast, point)
        except (EvaluationError, OverflowError):
            continue
        try:
            b = expr.evaluate(back, point)
        except (EvaluationError, OverflowError):
            raise AssertionError(f"reparse of {text!r} lost definedness")
        if abs(a) > 1e12:
            continue
        assert abs(a - b) <= 1e-15 * (1.0 + abs(a))
        checked += 1
    # vacuous draws happen (singular everywhere); hypothesis covers the rest


def test_evaluation_deterministic():
    ast = expr.parse("sin(u)*exp(v)-x/(u+v)+u^3")
    point = {"u": 0.7, "v": 1.3, "x": 0.2}
    first = expr.evaluate(ast, point)
    for _ in range(5):
        assert expr.evaluate(ast, point) == first


def test_compile_numpy_matches_evaluate():
    ast = expr.parse("ln(u+v)-u/(u+v)+sin(x)^2")
    fn = expr.compile_numpy(ast, ("u", "v", "x"))
    rng = np.random.default_rng(3)
    u, v, x = rng.uniform(0.5, 2.0, size=(3, 50))
    out = fn(u, v, x)
    for i in range(50):
        want = expr.evaluate(ast, {"u": u[i], "v": v[i], "x": x[i]})
        assert out[i] == pytest.approx(want, rel=1e-15)


def test_compile_numpy_constant_broadcast():
    fn = expr.compile_numpy(expr.parse("3/2"), ("x",))
    out = fn(np.zeros(7))
    assert out.shape == (7,)
    assert np.all(out == 1.5)
    assert fn(0.0) == 1.5


def test_constant_folding_collapses_literal_subtrees():
    folded = expr.constant_fold(expr.parse("2*3+1"))
    assert folded == expr.Const(7.0)
    folded = expr.constant_fold(expr.parse("u+(2-2)*1"))
    assert expr.evaluate(folded, {"u": 5.0}) == 5.0


def test_constant_folding_keeps_singular_literals():
    bad = expr.parse("1/(2-2)")
    folded = expr.constant_fold(bad)
    assert not isinstance(folded, expr.Const)
    with pytest.raises(EvaluationError):
        expr.evaluate(folded, {})
