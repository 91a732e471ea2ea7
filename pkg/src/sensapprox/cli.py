"""Command-line surface: sensitize, verify, norm, plot.

Exit codes: 0 success/PASS, 1 verification FAIL, 2 input error,
3 pipeline budget exhausted, 4 hypothesis violation (p out of range is
an input error; a numerically diverging moment is a hypothesis
violation).

Certificate files are JSON, schema_version "1". Quantities that must be
exact (scale, min_abs_slope, sup_bound, breakpoints) are "num/den"
rational strings; measured quantities are shortest round-trip decimals.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from fractions import Fraction

import numpy as np

from . import approx, norms
from .funcspace import SensitiveApproximant, StepFunction, TriangleWave
from .measures import BorelMeasure
from .parsing import (
    EvaluationError,
    MeasureSpecError,
    ParseError,
    parse_measure,
    parse_target,
    target_evaluator,
)

SCHEMA_VERSION = "1"

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_INPUT = 2
EXIT_BUDGET = 3
EXIT_HYPOTHESIS = 4


def _rat(fr: Fraction) -> str:
    return f"{fr.numerator}/{fr.denominator}"


def _parse_rat(text) -> Fraction:
    return Fraction(str(text))


def certificate_to_dict(cert: approx.Certificate) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "request": {
            "target": cert.target_text,
            "measure": cert.measure_text,
            "p": repr(cert.p),
            "eps": _rat(cert.eps),
            "M": _rat(cert.M),
        },
        "b": cert.b,
        "scale": _rat(cert.scale),
        "phi0": [
            {"value": _rat(v), "lower": _rat(lo), "upper": _rat(hi)}
            for v, lo, hi in cert.phi0.terms
        ],
        "exceptions": [
            {"point": _rat(p), "value": _rat(v)} for p, v in cert.phi0.exceptions
        ],
        "error_bound": repr(cert.error_bound),
        "error_method": cert.error_method,
        "min_abs_slope": _rat(cert.min_abs_slope),
        "sup_bound": _rat(cert.sup_bound),
        "nondiff_count_in_window": cert.nondiff_count_in_window,
        "window": {"lower": _rat(cert.window[0]), "upper": _rat(cert.window[1])},
        "quadrature_tolerance": repr(cert.quadrature_tolerance),
    }


def write_certificate(cert: approx.Certificate, path):
    with open(path, "w") as fh:
        json.dump(certificate_to_dict(cert), fh, indent=2, sort_keys=True)
        fh.write("\n")


class CorruptCertificate(ValueError):
    pass


def read_certificate(path) -> dict:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise CorruptCertificate(f"cannot read certificate: {exc}") from exc
    if data.get("schema_version") != SCHEMA_VERSION:
        raise CorruptCertificate(
            f"unsupported schema_version {data.get('schema_version')!r}"
        )
    required = (
        "request", "b", "scale", "phi0", "exceptions", "error_bound",
        "error_method", "min_abs_slope", "sup_bound", "quadrature_tolerance",
    )
    for key in required:
        if key not in data:
            raise CorruptCertificate(f"missing field {key!r}")
    return data


def reconstruct_approximant(data: dict) -> SensitiveApproximant:
    try:
        terms = [
            (_parse_rat(t["value"]), _parse_rat(t["lower"]), _parse_rat(t["upper"]))
            for t in data["phi0"]
        ]
        exceptions = [
            (_parse_rat(e["point"]), _parse_rat(e["value"]))
            for e in data["exceptions"]
        ]
        phi0 = StepFunction(terms=terms, exceptions=exceptions)
        scale = _parse_rat(data["scale"])
        b = int(data["b"])
        eps = _parse_rat(data["request"]["eps"])
        M = _parse_rat(data["request"]["M"])
        p = float(data["request"]["p"])
        stored_slope = _parse_rat(data["min_abs_slope"])
    except (KeyError, ValueError, TypeError) as exc:
        raise CorruptCertificate(f"malformed certificate field: {exc}") from exc
    if stored_slope != scale * b:
        raise CorruptCertificate(
            f"stored min_abs_slope {stored_slope} != scale*b {scale * b}"
        )
    return SensitiveApproximant(
        phi0=phi0, scale=scale, wave=TriangleWave(b=b), eps=eps, M=M, p=p
    )


# ---------------------------------------------------------------------------
# Flag parsing helpers


def _parse_p(text):
    try:
        p = float(Fraction(text)) if "/" in text else float(text)
    except (ValueError, ZeroDivisionError):
        raise ValueError(f"invalid p: {text!r}")
    if not (1 <= p < math.inf):
        raise ValueError("p must satisfy 1 ≤ p < ∞")
    return p


def _parse_positive_fraction(text, name):
    try:
        v = Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise ValueError(f"invalid {name}: {text!r}")
    if v <= 0:
        raise ValueError(f"{name} must be positive")
    return v


def _parse_nonneg_fraction(text, name):
    try:
        v = Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise ValueError(f"invalid {name}: {text!r}")
    if v < 0:
        raise ValueError(f"{name} must be nonnegative")
    return v


# ---------------------------------------------------------------------------
# Commands


def cmd_sensitize(args) -> int:
    try:
        target = parse_target(args.target)
        spec = parse_measure(args.measure)
        mu = BorelMeasure.from_spec(spec)
        p = _parse_p(args.p)
        eps = _parse_positive_fraction(args.eps, "eps")
        M = _parse_nonneg_fraction(args.M, "M")
        req = approx.ApproxRequest(target=target, mu=mu, p=p, eps=eps, M=M)
    except (ParseError, MeasureSpecError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    try:
        _y, cert = approx.sensitize(req)
    except approx.NonFiniteMomentError as exc:
        print(f"hypothesis violation: {exc}", file=sys.stderr)
        return EXIT_HYPOTHESIS
    except (approx.RefinementCapError, approx.TruncationCapError) as exc:
        print(f"pipeline budget exhausted: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    write_certificate(cert, args.out)
    print(
        f"b={cert.b} error_bound={cert.error_bound:.6g} "
        f"min_abs_slope={_rat(cert.min_abs_slope)}"
    )
    return EXIT_OK


def cmd_verify(args) -> int:
    try:
        data = read_certificate(args.cert)
        Y = reconstruct_approximant(data)
        target = parse_target(data["request"]["target"])
        spec = parse_measure(data["request"]["measure"])
        mu = BorelMeasure.from_spec(spec)
        eps = _parse_rat(data["request"]["eps"])
        M = _parse_rat(data["request"]["M"])
        p = float(data["request"]["p"])
    except (CorruptCertificate, ParseError, MeasureSpecError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT

    slope = Y.min_abs_slope()
    slope_ok = slope > M
    f = target_evaluator(target)
    est = norms.mc_norm(
        lambda xs: Y.eval_arr(xs) - f(xs), mu, p, n=args.samples, seed=args.seed
    )
    mc_total = est.value + est.absolute_error_bound
    error_ok = mc_total < float(eps)
    print(
        f"mc_distance={est.value:.6g} radius={est.absolute_error_bound:.6g} "
        f"eps={float(eps):.6g} min_abs_slope={_rat(slope)} M={float(M):.6g}"
    )
    if slope_ok and error_ok:
        print("PASS")
        return EXIT_OK
    reasons = []
    if not error_ok:
        reasons.append(f"MC distance + 4-sigma radius {mc_total:.6g} >= eps")
    if not slope_ok:
        reasons.append(f"min |slope| {float(slope):.6g} <= M {float(M):.6g}")
    print("FAIL: " + "; ".join(reasons))
    return EXIT_FAIL


def cmd_norm(args) -> int:
    try:
        target = parse_target(args.target)
        spec = parse_measure(args.measure)
        mu = BorelMeasure.from_spec(spec)
        p = _parse_p(args.p)
        tol = float(args.tol)
        if tol <= 0:
            raise ValueError("tol must be positive")
    except (ParseError, MeasureSpecError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    try:
        est = norms.lp_norm(
            target_evaluator(target), mu, p, tol,
            knots=[float(k) for k in mu.density_breakpoints()],
        )
    except norms.NonIntegrableError as exc:
        print(f"hypothesis violation: {exc}", file=sys.stderr)
        return EXIT_HYPOTHESIS
    except EvaluationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    print(f"value={est.value!r} bound={est.absolute_error_bound!r}")
    return EXIT_OK


def cmd_plot(args) -> int:
    try:
        data = read_certificate(args.cert)
        Y = reconstruct_approximant(data)
        target = parse_target(data["request"]["target"])
        lo_text, sep, hi_text = args.window.partition(":")
        if not sep:
            raise ValueError("window must be given as a:b")
        lo = Fraction(lo_text)
        hi = Fraction(hi_text)
        if not lo < hi:
            raise ValueError("window requires a < b")
        n = int(args.points)
        if n < 2:
            raise ValueError("points must be at least 2")
    except (CorruptCertificate, ParseError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT

    xs = [lo + (hi - lo) * Fraction(i, n - 1) for i in range(n)]
    lines = ["x,target,approximant"]
    for x in xs:
        try:
            tv = float(parse_eval(target, x))
        except EvaluationError:
            tv = math.nan
        yv = float(Y.eval(x))
        lines.append(f"{float(x)!r},{tv!r},{yv!r}")
    with open(args.out, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    side = args.out + ".nondiff"
    with open(side, "w") as fh:
        for pt in Y.nondiff_points(lo, hi):
            fh.write(f"{float(pt)!r}\n")
    print(f"wrote {args.out} and {side}")
    return EXIT_OK


def parse_eval(target, x):
    from .parsing import eval_target

    return eval_target(target, x)


# ---------------------------------------------------------------------------


def build_parser():
    parser = argparse.ArgumentParser(
        prog="sensapprox",
        description="Approximate an L^p target by a steep piecewise-linear "
        "function and certify the result.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    s = sub.add_parser("sensitize", help="run the pipeline, write a certificate")
    s.add_argument("--target", required=True)
    s.add_argument("--measure", required=True)
    s.add_argument("--p", required=True)
    s.add_argument("--eps", required=True)
    s.add_argument("--M", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_sensitize)

    v = sub.add_parser("verify", help="independently check a certificate")
    v.add_argument("--cert", required=True)
    v.add_argument("--samples", type=int, default=1_000_000)
    v.add_argument("--seed", type=int, default=0)
    v.set_defaults(func=cmd_verify)

    n = sub.add_parser("norm", help="L^p norm of a target under a measure")
    n.add_argument("--target", required=True)
    n.add_argument("--measure", required=True)
    n.add_argument("--p", required=True)
    n.add_argument("--tol", default="1e-6")
    n.set_defaults(func=cmd_norm)

    pl = sub.add_parser("plot", help="CSV samples of target and approximant")
    pl.add_argument("--cert", required=True)
    pl.add_argument("--window", required=True)
    pl.add_argument("--points", required=True)
    pl.add_argument("--out", required=True)
    pl.set_defaults(func=cmd_plot)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
