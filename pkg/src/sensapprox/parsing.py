"""Text formats for target functions and measure specifications.

Two small recursive-descent parsers share one tokenizer:

* target expressions over a single free variable ``x``, with the usual
  arithmetic operators, a closed set of named functions, and 3-argument
  conditionals ``if(cmp, then, else)``;
* measure specifications: a single distribution component or a weighted
  mixture ``mix(w1*K1, w2*K2, ...)``.

Numeric literals are exact decimals and are kept as ``Fraction`` values
throughout; nothing is widened to floating point at parse time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np


class ParseError(ValueError):
    """Syntax or validation failure, with a byte offset into the input."""

    def __init__(self, message, offset):
        super().__init__(f"{message} (offset {offset})")
        self.offset = offset


class EvaluationError(ValueError):
    """Evaluation produced a non-finite value or otherwise failed."""


class DomainError(EvaluationError):
    """Evaluation at a point outside a subterm's domain (log(-1) etc.)."""


# ---------------------------------------------------------------------------
# AST


@dataclass(frozen=True)
class Num:
    value: Fraction


@dataclass(frozen=True)
class Var:
    pass


@dataclass(frozen=True)
class Neg:
    operand: object


@dataclass(frozen=True)
class BinOp:
    op: str
    left: object
    right: object


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple


@dataclass(frozen=True)
class Compare:
    op: str
    left: object
    right: object


@dataclass(frozen=True)
class Conditional:
    test: Compare
    if_true: object
    if_false: object


@dataclass(frozen=True)
class TargetFunction:
    root: object
    source_text: str


FUNCTIONS = {
    "sin": 1,
    "cos": 1,
    "exp": 1,
    "log": 1,
    "abs": 1,
    "sqrt": 1,
    "min": 2,
    "max": 2,
}

CMP_OPS = ("<=", ">=", "==", "<", ">")


# ---------------------------------------------------------------------------
# Tokenizer

_PUNCT = ("<=", ">=", "==", "+", "-", "*", "/", "^", "(", ")", ",", "<", ">", "=", ";")


def _tokenize(text):
    tokens = []
    i = 0
    n = len(text)
    while i < n:
        c = text[i]
        if c.isspace():
            i += 1
            continue
        if c.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            if j < n and text[j] == ".":
                j += 1
                if j >= n or not text[j].isdigit():
                    raise ParseError("malformed number", i)
                while j < n and text[j].isdigit():
                    j += 1
            tokens.append(("num", text[i:j], i))
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            tokens.append(("ident", text[i:j], i))
            i = j
            continue
        for p in _PUNCT:
            if text.startswith(p, i):
                tokens.append(("op", p, i))
                i += len(p)
                break
        else:
            raise ParseError(f"unexpected character {c!r}", i)
    tokens.append(("end", "", n))
    return tokens


class _TokenStream:
    def __init__(self, text):
        self.text = text
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos]

    def next(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, value):
        kind, text, off = self.peek()
        if text != value or kind == "end":
            raise ParseError(f"expected {value!r}", off)
        return self.next()

    def at_end(self):
        return self.peek()[0] == "end"


# ---------------------------------------------------------------------------
# Target-function grammar
#
#   expr   := term (('+' | '-') term)*
#   term   := factor (('*' | '/') factor)*
#   factor := '-' factor | atom ('^' factor)?
#   atom   := number | 'x' | ident '(' args ')' | '(' expr ')'
#
# Unary minus binds looser than '^' (so "-x^2" is -(x^2), the usual
# mathematical convention), while '^' may still take a negated
# exponent ("2^-x").
#
# Comparisons are only admitted as the first argument of if(...).


class _ExprParser:
    def __init__(self, stream):
        self.s = stream

    def parse_expr(self):
        node = self.parse_term()
        while self.s.peek()[1] in ("+", "-") and self.s.peek()[0] == "op":
            op = self.s.next()[1]
            node = BinOp(op, node, self.parse_term())
        return node

    def parse_term(self):
        node = self.parse_factor()
        while self.s.peek()[1] in ("*", "/") and self.s.peek()[0] == "op":
            op = self.s.next()[1]
            node = BinOp(op, node, self.parse_factor())
        return node

    def parse_factor(self):
        if self.s.peek()[1] == "-" and self.s.peek()[0] == "op":
            self.s.next()
            return Neg(self.parse_factor())
        node = self.parse_atom()
        if self.s.peek()[1] == "^":
            self.s.next()
            node = BinOp("^", node, self.parse_factor())
        return node

    def parse_atom(self):
        kind, text, off = self.s.peek()
        if kind == "num":
            self.s.next()
            return Num(Fraction(text))
        if text == "(":
            self.s.next()
            node = self.parse_expr()
            self.s.expect(")")
            return node
        if kind == "ident":
            self.s.next()
            if text == "x":
                if self.s.peek()[1] == "(":
                    raise ParseError("'x' is not callable", self.s.peek()[2])
                return Var()
            if text == "if":
                return self._parse_if(off)
            if text not in FUNCTIONS:
                raise ParseError(f"unknown identifier {text!r}", off)
            self.s.expect("(")
            args = [self.parse_expr()]
            while self.s.peek()[1] == ",":
                self.s.next()
                args.append(self.parse_expr())
            self.s.expect(")")
            if len(args) != FUNCTIONS[text]:
                raise ParseError(
                    f"{text} expects {FUNCTIONS[text]} argument(s), got {len(args)}",
                    off,
                )
            return Call(text, tuple(args))
        raise ParseError("expected expression", off)

    def _parse_if(self, off):
        self.s.expect("(")
        left = self.parse_expr()
        kind, text, coff = self.s.peek()
        if text not in CMP_OPS:
            raise ParseError("expected comparison operator in if(...)", coff)
        self.s.next()
        right = self.parse_expr()
        test = Compare(text, left, right)
        self.s.expect(",")
        if_true = self.parse_expr()
        self.s.expect(",")
        if_false = self.parse_expr()
        self.s.expect(")")
        return Conditional(test, if_true, if_false)


def parse_target(text: str) -> TargetFunction:
    """Parse an expression over x into a validated tree."""
    if not text.strip():
        raise ParseError("empty expression", 0)
    stream = _TokenStream(text)
    root = _ExprParser(stream).parse_expr()
    if not stream.at_end():
        raise ParseError("trailing input", stream.peek()[2])
    return TargetFunction(root=root, source_text=text)


# ---------------------------------------------------------------------------
# Printing (fully parenthesized; parentheses carry no structure, so
# parse(print(parse(t))) == parse(t))


def decimal_str(fr: Fraction) -> str:
    """Exact decimal rendering; denominators are 2^a 5^b for parsed literals."""
    num, den = fr.numerator, fr.denominator
    if den == 1:
        return str(num)
    a = b = 0
    d = den
    while d % 2 == 0:
        d //= 2
        a += 1
    while d % 5 == 0:
        d //= 5
        b += 1
    if d != 1:
        return f"{num}/{den}"
    k = max(a, b)
    scaled = abs(num) * 10**k // den
    digits = str(scaled).rjust(k + 1, "0")
    sign = "-" if num < 0 else ""
    return f"{sign}{digits[:-k]}.{digits[-k:]}"


def print_target(node) -> str:
    if isinstance(node, TargetFunction):
        return print_target(node.root)
    if isinstance(node, Num):
        return decimal_str(node.value)
    if isinstance(node, Var):
        return "x"
    if isinstance(node, Neg):
        return f"(-{print_target(node.operand)})"
    if isinstance(node, BinOp):
        return f"({print_target(node.left)} {node.op} {print_target(node.right)})"
    if isinstance(node, Compare):
        return f"{print_target(node.left)} {node.op} {print_target(node.right)}"
    if isinstance(node, Conditional):
        return (
            f"if({print_target(node.test)}, {print_target(node.if_true)}, "
            f"{print_target(node.if_false)})"
        )
    if isinstance(node, Call):
        return f"{node.name}({', '.join(print_target(a) for a in node.args)})"
    raise TypeError(f"not an expression node: {node!r}")


# ---------------------------------------------------------------------------
# Scalar evaluation (Fraction-preserving where the operation is exact)

_EXP_LIMIT = 10**6


def _as_number(x):
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    return float(x)


def _both_exact(a, b):
    return isinstance(a, Fraction) and isinstance(b, Fraction)


def _ev(node, x):
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        if x is None:
            raise EvaluationError("free variable in constant context")
        return x
    if isinstance(node, Neg):
        return -_ev(node.operand, x)
    if isinstance(node, BinOp):
        a = _ev(node.left, x)
        b = _ev(node.right, x)
        return _apply_binop(node.op, a, b)
    if isinstance(node, Conditional):
        return _ev(node.if_true if _ev_test(node.test, x) else node.if_false, x)
    if isinstance(node, Call):
        args = [_ev(a, x) for a in node.args]
        return _apply_call(node.name, args)
    raise TypeError(f"not an expression node: {node!r}")


def _apply_binop(op, a, b):
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    if op == "/":
        if b == 0:
            raise DomainError("division by zero")
        return a / b
    if op == "^":
        return _apply_pow(a, b)
    raise ValueError(op)


def _apply_pow(a, b):
    if isinstance(b, Fraction) and b.denominator == 1 and abs(b) <= _EXP_LIMIT:
        e = int(b)
        if a == 0 and e < 0:
            raise DomainError("zero raised to a negative power")
        if isinstance(a, Fraction):
            return a**e
        return _finite(math.pow(a, e))
    af, bf = float(a), float(b)
    if af < 0 and bf != int(bf):
        raise DomainError("negative base with non-integer exponent")
    if af == 0 and bf < 0:
        raise DomainError("zero raised to a negative power")
    try:
        return _finite(math.pow(af, bf))
    except (OverflowError, ValueError) as exc:
        raise EvaluationError(f"pow failed: {exc}") from exc


def _finite(v):
    if not math.isfinite(v):
        raise EvaluationError("overflow to non-finite value")
    return v


def _apply_call(name, args):
    if name == "abs":
        return abs(args[0])
    if name == "min":
        return min(args)
    if name == "max":
        return max(args)
    v = float(args[0])
    if name == "log":
        if v <= 0:
            raise DomainError(f"log of non-positive value {v}")
        return _finite(math.log(v))
    if name == "sqrt":
        if v < 0:
            raise DomainError(f"sqrt of negative value {v}")
        return _finite(math.sqrt(v))
    try:
        return _finite(getattr(math, name)(v))
    except OverflowError as exc:
        raise EvaluationError(f"{name} overflow") from exc


def _ev_test(test, x):
    a = _ev(test.left, x)
    b = _ev(test.right, x)
    return {
        "<": a < b,
        "<=": a <= b,
        ">": a > b,
        ">=": a >= b,
        "==": a == b,
    }[test.op]


def eval_target(f: TargetFunction, x):
    """Value of the expression at x; exact Fraction where possible."""
    v = _ev(f.root, _as_number(x))
    if isinstance(v, float):
        return _finite(v)
    return v


def eval_const(node):
    """Evaluate an x-free subtree; raises if the subtree mentions x."""
    return _ev(node, None)


# ---------------------------------------------------------------------------
# Vectorized evaluation (float arrays; branch masking keeps untaken
# conditional branches unevaluated, as in scalar semantics)


def _eva(node, xs):
    if isinstance(node, Num):
        return np.full(xs.shape, float(node.value))
    if isinstance(node, Var):
        return xs
    if isinstance(node, Neg):
        return -_eva(node.operand, xs)
    if isinstance(node, BinOp):
        a = _eva(node.left, xs)
        b = _eva(node.right, xs)
        return _apply_binop_vec(node.op, a, b)
    if isinstance(node, Conditional):
        mask = _eva_test(node.test, xs)
        out = np.empty(xs.shape)
        if mask.any():
            out[mask] = _eva(node.if_true, xs[mask])
        inv = ~mask
        if inv.any():
            out[inv] = _eva(node.if_false, xs[inv])
        return out
    if isinstance(node, Call):
        return _apply_call_vec(node.name, [_eva(a, xs) for a in node.args])
    raise TypeError(f"not an expression node: {node!r}")


def _apply_binop_vec(op, a, b):
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    if op == "/":
        if np.any(b == 0):
            raise DomainError("division by zero")
        return a / b
    if op == "^":
        if np.any((a < 0) & (b != np.floor(b))):
            raise DomainError("negative base with non-integer exponent")
        if np.any((a == 0) & (b < 0)):
            raise DomainError("zero raised to a negative power")
        with np.errstate(over="ignore", invalid="ignore"):
            return np.power(a, b)
    raise ValueError(op)


def _apply_call_vec(name, args):
    if name == "abs":
        return np.abs(args[0])
    if name == "min":
        return np.minimum(args[0], args[1])
    if name == "max":
        return np.maximum(args[0], args[1])
    v = args[0]
    if name == "log":
        if np.any(v <= 0):
            raise DomainError("log of non-positive value")
        return np.log(v)
    if name == "sqrt":
        if np.any(v < 0):
            raise DomainError("sqrt of negative value")
        return np.sqrt(v)
    with np.errstate(over="ignore"):
        return getattr(np, name)(v)


def _eva_test(test, xs):
    a = _eva(test.left, xs)
    b = _eva(test.right, xs)
    return {
        "<": a < b,
        "<=": a <= b,
        ">": a > b,
        ">=": a >= b,
        "==": a == b,
    }[test.op]


def eval_target_array(f: TargetFunction, xs) -> np.ndarray:
    """Evaluate at a float array of points; raises on non-finite results."""
    xs = np.asarray(xs, dtype=float)
    with np.errstate(over="ignore"):
        out = _eva(f.root, xs)
    if not np.all(np.isfinite(out)):
        raise EvaluationError("overflow to non-finite value")
    return out


def target_evaluator(f: TargetFunction):
    """Array-callable view of the target."""
    return lambda xs: eval_target_array(f, xs)


# ---------------------------------------------------------------------------
# Piecewise-constant structure detection
#
# Returns the sorted threshold list when every occurrence of x is the bare
# variable on one side of a comparison against an x-free expression, so the
# target is constant on each open cell between thresholds; returns None
# otherwise.


def _collect_thresholds(node, out):
    if isinstance(node, (Num,)):
        return True
    if isinstance(node, Var):
        return False
    if isinstance(node, Neg):
        return _collect_thresholds(node.operand, out)
    if isinstance(node, BinOp):
        return _collect_thresholds(node.left, out) and _collect_thresholds(
            node.right, out
        )
    if isinstance(node, Call):
        return all(_collect_thresholds(a, out) for a in node.args)
    if isinstance(node, Conditional):
        ok = _threshold_from_compare(node.test, out)
        return (
            ok
            and _collect_thresholds(node.if_true, out)
            and _collect_thresholds(node.if_false, out)
        )
    raise TypeError(f"not an expression node: {node!r}")


def _is_x_free(node):
    if isinstance(node, Var):
        return False
    if isinstance(node, Num):
        return True
    if isinstance(node, Neg):
        return _is_x_free(node.operand)
    if isinstance(node, BinOp):
        return _is_x_free(node.left) and _is_x_free(node.right)
    if isinstance(node, Call):
        return all(_is_x_free(a) for a in node.args)
    if isinstance(node, Conditional):
        return (
            _is_x_free(node.test.left)
            and _is_x_free(node.test.right)
            and _is_x_free(node.if_true)
            and _is_x_free(node.if_false)
        )
    raise TypeError(f"not an expression node: {node!r}")


def _threshold_from_compare(test, out):
    left_is_x = isinstance(test.left, Var)
    right_is_x = isinstance(test.right, Var)
    if left_is_x and _is_x_free(test.right):
        out.append(eval_const(test.right))
        return True
    if right_is_x and _is_x_free(test.left):
        out.append(eval_const(test.left))
        return True
    if _is_x_free(test.left) and _is_x_free(test.right):
        return True
    return False


def piecewise_constant_thresholds(f: TargetFunction):
    """Sorted thresholds if f is detectably piecewise constant, else None."""
    out = []
    try:
        if not _collect_thresholds(f.root, out):
            return None
    except EvaluationError:
        return None
    vals = []
    for v in out:
        vals.append(v if isinstance(v, Fraction) else Fraction(v))
    return sorted(set(vals))


# ---------------------------------------------------------------------------
# Measure-specification grammar
#
#   measure  := component | 'mix' '(' weighted (',' weighted)* [',' 'mass' '=' number] ')'
#   weighted := number '*' component
#   component:= 'atom(c)' | 'uniform(a,b)' | 'normal(m,s)' | 'exponential(r)'
#              | 'pwd(breaks(b0,...,bn), poly(c0,...), ...)'


class MeasureSpecError(ValueError):
    """Invalid component parameters or mass mismatch."""


def _parse_signed_number(stream) -> Fraction:
    negate = False
    if stream.peek()[1] == "-":
        stream.next()
        negate = True
    kind, text, off = stream.peek()
    if kind != "num":
        raise ParseError("expected number", off)
    stream.next()
    v = Fraction(text)
    return -v if negate else v


def _parse_number_list(stream):
    stream.expect("(")
    vals = [_parse_signed_number(stream)]
    while stream.peek()[1] == ",":
        stream.next()
        vals.append(_parse_signed_number(stream))
    stream.expect(")")
    return vals


def _parse_component(stream):
    from . import measures

    kind, name, off = stream.peek()
    if kind != "ident":
        raise ParseError("expected distribution name", off)
    stream.next()
    if name == "atom":
        args = _parse_number_list(stream)
        if len(args) != 1:
            raise ParseError("atom expects 1 argument", off)
        return measures.AtomKind(args[0])
    if name == "uniform":
        args = _parse_number_list(stream)
        if len(args) != 2:
            raise ParseError("uniform expects 2 arguments", off)
        a, b = args
        if not a < b:
            raise MeasureSpecError(f"uniform requires a < b, got ({a}, {b})")
        return measures.Uniform(a, b)
    if name == "normal":
        args = _parse_number_list(stream)
        if len(args) != 2:
            raise ParseError("normal expects 2 arguments", off)
        mean, std = args
        if not std > 0:
            raise MeasureSpecError(f"normal requires stddev > 0, got {std}")
        return measures.Normal(mean, std)
    if name == "exponential":
        args = _parse_number_list(stream)
        if len(args) != 1:
            raise ParseError("exponential expects 1 argument", off)
        (rate,) = args
        if not rate > 0:
            raise MeasureSpecError(f"exponential requires rate > 0, got {rate}")
        return measures.Exponential(rate)
    if name == "pwd":
        return _parse_pwd(stream, off)
    raise ParseError(f"unknown distribution {name!r}", off)


def _parse_pwd(stream, off):
    from . import measures

    stream.expect("(")
    kind, name, boff = stream.peek()
    if name != "breaks":
        raise ParseError("pwd expects breaks(...) first", boff)
    stream.next()
    breaks = _parse_number_list(stream)
    if len(breaks) < 2 or any(a >= b for a, b in zip(breaks, breaks[1:])):
        raise MeasureSpecError("pwd breakpoints must be strictly increasing")
    pieces = []
    while stream.peek()[1] == ",":
        stream.next()
        kind, name, poff = stream.peek()
        if name != "poly":
            raise ParseError("expected poly(...)", poff)
        stream.next()
        pieces.append(tuple(_parse_number_list(stream)))
    stream.expect(")")
    if len(pieces) != len(breaks) - 1:
        raise MeasureSpecError(
            f"pwd needs {len(breaks) - 1} poly pieces, got {len(pieces)}"
        )
    return measures.PiecewisePoly(tuple(breaks), tuple(pieces))


def parse_measure(text: str):
    """Parse a measure specification into a validated MeasureSpec."""
    from . import measures

    if not text.strip():
        raise ParseError("empty measure specification", 0)
    stream = _TokenStream(text)
    kind, name, off = stream.peek()
    components = []
    declared_mass = None
    if name == "mix" and kind == "ident":
        stream.next()
        stream.expect("(")
        while True:
            kind, tok, toff = stream.peek()
            if tok == "mass":
                stream.next()
                stream.expect("=")
                declared_mass = _parse_signed_number(stream)
                break
            w = _parse_signed_number(stream)
            if w < 0:
                raise MeasureSpecError(f"negative weight {w}")
            stream.expect("*")
            components.append((w, _parse_component(stream)))
            if stream.peek()[1] != ",":
                break
            stream.next()
        stream.expect(")")
        if not components:
            raise ParseError("mix requires at least one component", off)
    else:
        components.append((Fraction(1), _parse_component(stream)))
    if not stream.at_end():
        raise ParseError("trailing input", stream.peek()[2])

    total = sum(w for w, _ in components)
    if declared_mass is not None:
        if declared_mass <= 0:
            raise MeasureSpecError(f"declared mass must be positive, got {declared_mass}")
        if total != declared_mass:
            raise MeasureSpecError(
                f"weights sum to {total}, declared mass is {declared_mass}"
            )
    if total <= 0:
        raise MeasureSpecError("total mass must be positive")
    return measures.MeasureSpec(
        components=tuple(components),
        declared_total_mass=declared_mass if declared_mass is not None else total,
        source_text=text,
    )
