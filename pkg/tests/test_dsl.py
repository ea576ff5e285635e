"""Tests for src.dsl module."""

import math

import numpy as np
import pytest
from hypothesis import HealthCheck, assume, given, settings
from hypothesis import strategies as st

from src.dsl import (
    Binary,
    Const,
    Coord,
    ExprSyntaxError,
    ExpressionDomainError,
    ModelSyntaxError,
    ModelValidationError,
    PowI,
    Unary,
    UnknownIdentifierError,
    UnknownModelError,
    eval_expr,
    load_builtin,
    load_model,
    parse_expr,
    parse_model,
    print_expr,
)

XYZ = ("x", "y", "z")

inside = st.floats(min_value=-0.9, max_value=0.9, allow_nan=False)


def expressions(max_constant: float = 100.0):
    """Random expression trees over x, y, z."""
    leaves = st.one_of(
        st.floats(min_value=0.0, max_value=max_constant, allow_nan=False).map(lambda v: Const(abs(v))),
        st.sampled_from([Coord(0, "x"), Coord(1, "y"), Coord(2, "z")]),
    )

    def extend(children):
        return st.one_of(
            st.tuples(st.sampled_from(["neg", "exp", "sin", "cosh"]), children).map(
                lambda t: Unary(*t)
            ),
            st.tuples(st.sampled_from(["add", "sub", "mul", "div"]), children, children).map(
                lambda t: Binary(*t)
            ),
            st.tuples(children, st.integers(min_value=-3, max_value=3)).map(lambda t: PowI(*t)),
        )

    return st.recursive(leaves, extend, max_leaves=12)


def subtrees(tree):
    yield tree
    match tree:
        case Unary(_, arg):
            yield from subtrees(arg)
        case Binary(_, left, right):
            yield from subtrees(left)
            yield from subtrees(right)
        case PowI(base, _):
            yield from subtrees(base)


def value_differences(tree, point, h=1e-5):
    """Central differences of the jet value along each coordinate."""
    result = []
    for i in range(len(point)):
        step = np.zeros(len(point))
        step[i] = h
        plus = eval_expr(tree, np.add(point, step)).value
        minus = eval_expr(tree, np.subtract(point, step)).value
        result.append((plus - minus) / (2 * h))
    return np.array(result)


def gradient_differences(tree, point, h=1e-5):
    """Central differences of the jet gradient; row i differentiates along coordinate i."""
    rows = []
    for i in range(len(point)):
        step = np.zeros(len(point))
        step[i] = h
        plus = eval_expr(tree, np.add(point, step)).grad
        minus = eval_expr(tree, np.subtract(point, step)).grad
        rows.append((plus - minus) / (2 * h))
    return np.array(rows)


class TestParseExpr:
    """Test cases for the expression parser."""

    def test_function_of_product(self):
        assert parse_expr("exp(2*z)", XYZ) == Unary("exp", Binary("mul", Const(2.0), Coord(2, "z")))

    def test_frame_coefficient(self):
        assert parse_expr("y*exp(z)", XYZ) == Binary("mul", Coord(1, "y"), Unary("exp", Coord(2, "z")))

    def test_precedence(self):
        """Products bind tighter than sums and powers tighter than products."""
        assert print_expr(parse_expr("1 + 2*x^2", XYZ)) == "(1.0 + (2.0 * (x^2)))"

    def test_unary_minus_binds_tighter_than_power(self):
        assert parse_expr("-x^2", XYZ) == PowI(Unary("neg", Coord(0, "x")), 2)

    def test_left_associativity(self):
        assert print_expr(parse_expr("x - y - z", XYZ)) == "((x - y) - z)"
        assert print_expr(parse_expr("x / y / z", XYZ)) == "((x / y) / z)"

    def test_negative_exponent(self):
        assert parse_expr("x^-2", XYZ) == PowI(Coord(0, "x"), -2)

    def test_unterminated_call(self):
        """A call cut short reports the byte offset where an expression was expected."""
        with pytest.raises(ExprSyntaxError) as exc_info:
            parse_expr("exp(", XYZ)

        assert exc_info.value.offset == 4
        assert exc_info.value.expected == ("expression",)

    def test_offset_counts_bytes(self):
        """Offsets are UTF-8 byte offsets, so a no-break space counts twice."""
        with pytest.raises(ExprSyntaxError) as exc_info:
            parse_expr("x\u00a0+", XYZ)

        assert exc_info.value.offset == 4

    def test_unreadable_character(self):
        with pytest.raises(ExprSyntaxError) as exc_info:
            parse_expr("x + é", XYZ)

        assert exc_info.value.offset == 4

    def test_fractional_exponent_is_rejected(self):
        with pytest.raises(ExprSyntaxError) as exc_info:
            parse_expr("x^0.5", XYZ)

        assert "integer exponent" in exc_info.value.expected

    def test_unknown_identifier(self):
        with pytest.raises(UnknownIdentifierError) as exc_info:
            parse_expr("w + 1", XYZ)

        assert exc_info.value.name == "w"
        assert "x, y, z" in str(exc_info.value)
        assert "exp" in str(exc_info.value)

    @given(expressions())
    @settings(max_examples=100, deadline=None)
    def test_print_then_parse_is_identity(self, tree):
        """Printing a tree and parsing it back yields a structurally equal tree."""
        assert parse_expr(print_expr(tree), XYZ) == tree


class TestEvalExpr:
    """Test cases for jet evaluation of expressions."""

    def test_exp_at_origin(self):
        r = eval_expr(parse_expr("exp(2*z)", XYZ), (0.0, 0.0, 0.0))

        assert r.value == 1.0
        np.testing.assert_allclose(r.grad, [0.0, 0.0, 2.0])
        assert r.hessian[2, 2] == pytest.approx(4.0)

    def test_half_exp(self):
        """½e^{2z} at z = 0.5 is ½e with z-derivative e."""
        r = eval_expr(parse_expr("(1/2)*exp(2*z)", XYZ), (0.0, 0.0, 0.5))

        assert r.value == pytest.approx(0.5 * math.e)
        assert r.grad[2] == pytest.approx(math.e)

    def test_domain_error_carries_path(self):
        with pytest.raises(ExpressionDomainError) as exc_info:
            eval_expr(parse_expr("1 + log(x)", XYZ), (0.0, 0.0, 0.0))

        assert exc_info.value.path == ("add", "log")
        assert exc_info.value.op == "log"

    def test_division_by_zero(self):
        with pytest.raises(ExpressionDomainError):
            eval_expr(parse_expr("1/(x - y)", XYZ), (1.0, 1.0, 0.0))

    @given(expressions(max_constant=3.0))
    @settings(
        max_examples=100,
        deadline=None,
        suppress_health_check=[HealthCheck.filter_too_much, HealthCheck.too_slow],
    )
    def test_hessian_is_symmetric_derivative_of_gradient(self, tree):
        """Differencing the gradient gives a symmetric matrix equal to the Hessian."""
        point = (0.3, -0.7, 0.5)
        try:
            jets = [eval_expr(t, point) for t in subtrees(tree)]
            differences = gradient_differences(tree, point)
        except ExpressionDomainError:
            assume(False)
        bound = max(
            max(abs(j.value), np.max(np.abs(j.grad)), np.max(np.abs(j.hessian))) for j in jets
        )
        assume(bound < 1e3)
        hessian = jets[0].hessian
        tol = 1e-4 * (1.0 + bound)

        np.testing.assert_array_equal(hessian, hessian.T)
        np.testing.assert_allclose(differences, differences.T, atol=tol)
        np.testing.assert_allclose(hessian, differences, atol=tol)

    @given(st.tuples(inside, inside, inside))
    @settings(max_examples=50, deadline=None)
    def test_model_expressions_match_differences(self, example25_spec, point):
        """Every expression of the embedded model differentiates like its values."""
        spec = example25_spec
        corpus = [e for row in spec.frame for e in row] + [spec.alpha_ref, spec.beta_ref]
        corpus += [c for ref in spec.references for c in ref.components]

        for tree in corpus:
            jet = eval_expr(tree, point)

            np.testing.assert_allclose(jet.grad, value_differences(tree, point), rtol=1e-6, atol=1e-8)
            np.testing.assert_allclose(
                jet.hessian, gradient_differences(tree, point), rtol=1e-6, atol=1e-8
            )


class TestParseModel:
    """Test cases for model files."""

    def test_example25(self, example25_spec):
        spec = example25_spec

        assert spec.name == "example25"
        assert spec.n == 1
        assert spec.coords == XYZ
        assert spec.xi_index == 2
        assert spec.epsilon == (1, -1, 1)
        assert spec.phi_frame == ((0, 1, 0), (1, 0, 0), (0, 0, 0))
        assert spec.box == ((-1.0, 1.0),) * 3
        assert spec.frame[0][2] == parse_expr("y*exp(z)", XYZ)
        assert len(spec.references) == 15

    def test_text_without_references(self, example25_text):
        spec = parse_model(example25_text)

        assert spec.references == ()
        assert spec.alpha_ref is None
        assert spec.pp_params == (1.0, 1.0)

    def test_defaults_and_box(self, example25_text):
        spec = parse_model(example25_text + "box z in [-0.5, 2]\npp_params = (2, -1)\n")

        assert spec.box[2] == (-0.5, 2.0)
        assert spec.box[0] == (-1.0, 1.0)
        assert spec.pp_params == (2.0, -1.0)
        assert spec.box_center == (0.0, 0.0, 0.75)

    def test_wrong_signature(self, example25_text):
        """A signature error names the epsilon rule."""
        text = example25_text.replace("epsilon = (+1, -1, +1)", "epsilon = (+1, +1, +1)")

        with pytest.raises(ModelValidationError) as exc_info:
            parse_model(text)

        assert exc_info.value.errors == [("epsilon", "signature must be (2, 1)")]

    def test_timelike_xi(self, example25_text):
        text = example25_text.replace("epsilon = (+1, -1, +1)", "epsilon = (+1, +1, -1)")

        with pytest.raises(ModelValidationError) as exc_info:
            parse_model(text)

        assert "xi must be spacelike" in str(exc_info.value)

    def test_phi_not_involutive(self, example25_text):
        text = example25_text.replace("phi E2 = E1", "phi E2 = 0")

        with pytest.raises(ModelValidationError) as exc_info:
            parse_model(text)

        assert "φ² = id − η⊗ξ violated" in str(exc_info.value)

    def test_phi_moves_xi(self, example25_text):
        text = example25_text.replace("phi E3 = 0", "phi E3 = E1")

        with pytest.raises(ModelValidationError) as exc_info:
            parse_model(text)

        assert "φξ = 0 violated" in str(exc_info.value)

    def test_zero_pp_params(self, example25_text):
        with pytest.raises(ModelValidationError) as exc_info:
            parse_model(example25_text + "pp_params = (0, 1)\n")

        assert exc_info.value.errors[0][0] == "pp_params"

    def test_singular_frame(self, example25_text):
        text = example25_text.replace("frame E3 = (0, 0, 1)", "frame E3 = (exp(z), 0, y*exp(z))")

        with pytest.raises(ModelValidationError) as exc_info:
            parse_model(text)

        assert "not invertible" in str(exc_info.value)

    def test_missing_frame_field(self, example25_text):
        text = example25_text.replace("frame E3 = (0, 0, 1)\n", "")

        with pytest.raises(ModelSyntaxError):
            parse_model(text)

    def test_syntax_error_reports_line(self, example25_text):
        text = example25_text.replace("frame E2 = (0, exp(z), 0)", "frame E2 = (0, exp(z, 0)")

        with pytest.raises(ModelSyntaxError) as exc_info:
            parse_model(text)

        assert exc_info.value.line == 5

    def test_unknown_statement(self, example25_text):
        with pytest.raises(ModelSyntaxError) as exc_info:
            parse_model(example25_text + "torsion = 0\n")

        assert "unknown statement" in str(exc_info.value)

    def test_comments_are_ignored(self, example25_text):
        spec = parse_model("# leading comment\n" + example25_text.replace("n = 1", "n = 1  # one"))

        assert spec.n == 1

    def test_xi_alias_in_references(self, example25_text):
        spec = parse_model(example25_text + "ref nabla xi xi = (0, 0, 0)\n")

        assert spec.references[0].i == 2
        assert spec.references[0].j == 2
        assert spec.references[0].kind == "nabla"

    def test_load_model_from_file(self, example25_text, write_model):
        spec = load_model(write_model(example25_text))

        assert spec.name == "example25"

    def test_unknown_builtin(self):
        with pytest.raises(UnknownModelError):
            load_builtin("sphere")

    def test_flat3(self, flat3_spec):
        assert flat3_spec.frame[0] == (Const(1.0), Const(0.0), Const(0.0))
        assert flat3_spec.alpha_ref == Const(0.0)
