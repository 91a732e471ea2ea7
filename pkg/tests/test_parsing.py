import math
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from sensapprox.parsing import (
    BinOp,
    Compare,
    Conditional,
    DomainError,
    MeasureSpecError,
    Num,
    ParseError,
    Var,
    eval_target,
    eval_target_array,
    parse_measure,
    parse_target,
    piecewise_constant_thresholds,
    print_target,
)


CORPUS = [
    "x^2",
    "if(x < 0, -1, 1)",
    "0",
    "x",
    "1 + 2*x - x^3",
    "sin(x) + cos(x)",
    "exp(-x^2)",
    "abs(x - 0.5)",
    "min(x, 0.5) * max(x, 0)",
    "if(x <= 0.25, x, if(x >= 0.75, 1 - x, 0.5))",
    "sqrt(abs(x))",
    "log(x + 2)",
    "-x",
    "2^x",
    "(x + 1) / (x^2 + 1)",
]


class TestParseTarget:
    def test_power_base_case(self):
        t = parse_target("x^2")
        assert t.root == BinOp("^", Var(), Num(Fraction(2)))

    def test_conditional_base_case(self):
        t = parse_target("if(x < 0, -1, 1)")
        assert isinstance(t.root, Conditional)
        assert t.root.test == Compare("<", Var(), Num(Fraction(0)))

    def test_incomplete_expression_offset(self):
        with pytest.raises(ParseError) as e:
            parse_target("x +")
        assert e.value.offset == 3

    def test_unknown_identifier(self):
        with pytest.raises(ParseError, match="unknown identifier"):
            parse_target("foo(x)")

    def test_arity_mismatch(self):
        with pytest.raises(ParseError, match="argument"):
            parse_target("sin(x, 1)")

    def test_empty(self):
        with pytest.raises(ParseError):
            parse_target("   ")

    def test_comparison_only_inside_if(self):
        with pytest.raises(ParseError):
            parse_target("x < 1")

    @pytest.mark.parametrize("text", CORPUS)
    def test_round_trip(self, text):
        t = parse_target(text)
        printed = print_target(t)
        assert parse_target(printed).root == t.root
        # fixpoint: printing again is stable
        assert print_target(parse_target(printed)) == printed

    def test_unary_minus_binds_looser_than_power(self):
        t = parse_target("-x^2")
        assert eval_target(t, 2) == -4
        assert eval_target(parse_target("exp(-x^2)"), 3) == pytest.approx(
            math.exp(-9))
        # a negated exponent is still admitted
        assert eval_target(parse_target("2^-x"), 2) == Fraction(1, 4)

    def test_exact_decimal_literals(self):
        t = parse_target("0.1")
        assert t.root == Num(Fraction(1, 10))


class TestEvalTarget:
    def test_square(self):
        assert eval_target(parse_target("x^2"), 3) == 9

    def test_conditional(self):
        assert eval_target(parse_target("if(x < 0, -1, 1)"), -2) == -1

    def test_log_domain_error(self):
        with pytest.raises(DomainError):
            eval_target(parse_target("log(x)"), -1)

    def test_sqrt_domain_error(self):
        with pytest.raises(DomainError):
            eval_target(parse_target("sqrt(x)"), -4)

    def test_division_by_zero(self):
        with pytest.raises(DomainError):
            eval_target(parse_target("1/x"), 0)

    def test_purity_bit_identical(self):
        t = parse_target("sin(x) * exp(x) + x^3")
        for x in (0.1, -2.7, 3.14159):
            assert eval_target(t, x) == eval_target(t, x)

    def test_exact_rational_result(self):
        v = eval_target(parse_target("x^2 + 0.5"), Fraction(1, 3))
        assert v == Fraction(1, 9) + Fraction(1, 2)

    @pytest.mark.parametrize("text", CORPUS)
    def test_array_matches_scalar(self, text):
        t = parse_target(text)
        xs = [-1.5, -0.3, 0.2, 0.9, 2.5]
        out = eval_target_array(t, xs)
        for x, v in zip(xs, out):
            assert float(eval_target(t, x)) == pytest.approx(v, abs=1e-12)

    @given(st.floats(min_value=-100, max_value=100, allow_nan=False))
    def test_abs_nonnegative(self, x):
        assert eval_target(parse_target("abs(x)"), x) >= 0


class TestPiecewiseConstantDetection:
    def test_indicator(self):
        t = parse_target("if(x<0.5, if(x>0, 1, 0), 0)")
        assert piecewise_constant_thresholds(t) == [0, Fraction(1, 2)]

    def test_not_piecewise(self):
        assert piecewise_constant_thresholds(parse_target("x^2")) is None

    def test_constant(self):
        assert piecewise_constant_thresholds(parse_target("3")) == []


class TestParseMeasure:
    def test_single_component(self):
        spec = parse_measure("normal(0,1)")
        assert len(spec.components) == 1
        assert spec.components[0][0] == 1
        assert spec.declared_total_mass == 1

    def test_mixture(self):
        spec = parse_measure("mix(0.5*atom(0), 0.5*uniform(0,1))")
        assert len(spec.components) == 2
        assert spec.declared_total_mass == 1

    def test_invalid_uniform(self):
        with pytest.raises(MeasureSpecError, match="a < b"):
            parse_measure("uniform(1,0)")

    def test_negative_weight(self):
        with pytest.raises(MeasureSpecError, match="negative weight"):
            parse_measure("mix(-0.5*atom(0), 1.5*uniform(0,1))")

    def test_mass_mismatch(self):
        with pytest.raises(MeasureSpecError, match="declared mass"):
            parse_measure("mix(0.5*atom(0), 0.25*uniform(0,1), mass=1)")

    def test_declared_mass_ok(self):
        spec = parse_measure("mix(1*atom(0), 3*uniform(0,1), mass=4)")
        assert spec.declared_total_mass == 4

    def test_invalid_normal(self):
        with pytest.raises(MeasureSpecError, match="stddev"):
            parse_measure("normal(0,0)")

    def test_invalid_exponential(self):
        with pytest.raises(MeasureSpecError, match="rate"):
            parse_measure("exponential(-1)")

    def test_pwd(self):
        spec = parse_measure("pwd(breaks(0,1), poly(1))")
        assert len(spec.components) == 1

    def test_pwd_bad_integral(self):
        with pytest.raises(MeasureSpecError, match="integrates"):
            parse_measure("pwd(breaks(0,2), poly(1))")

    def test_pwd_negative_piece(self):
        with pytest.raises(MeasureSpecError, match="negative"):
            parse_measure("pwd(breaks(-1,1), poly(0.5,1))")

    def test_syntax_error(self):
        with pytest.raises(ParseError):
            parse_measure("uniform(0,")
