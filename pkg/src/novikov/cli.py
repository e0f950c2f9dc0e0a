"""Command-line drivers.

Every command prints either human-readable text or a machine report: one
JSON object per line, starting with a schema header and ending with a
result line.  Exit codes: 0 all checks pass, 1 a check failed, 2 bad input.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile
from fractions import Fraction
from typing import Any, List, Optional

from . import io as fileio
from .complex import AtLeastE, barcode, boundary_depth, persistence_map, random_complex, validate, window_homology
from .core import NovikovError, as_fraction
from .equivariant import (
    GradingRequired,
    InconsistentFamilies,
    PreconditionError,
    assemble_equivariant,
    build_tate,
    equivariant_depth,
    quasi_frobenius_check,
    tate_model_equivariant,
    verify_depth_inequality,
)
from .perturbation import strictify, validate_sdr
from .scenario import ScenarioConfig, ScenarioPrecondition, cmd_scenario, model_complex, next_prime_and_gap, prime_gap_sweep
from .xk import ObstructionNonexact, XkModule, promote, validate_xk

SCHEMA = "novikov-report"
SCHEMA_VERSION = 1


class InputError(Exception):
    pass


def _plain(value: Any) -> Any:
    """Exact JSON form: rationals as [num, den], no floats."""
    if isinstance(value, bool) or value is None or isinstance(value, (int, str)):
        return value
    if isinstance(value, Fraction):
        return [value.numerator, value.denominator]
    if isinstance(value, float):
        if math.isinf(value):
            return "inf"
        raise TypeError("floats are not allowed in reports")
    if isinstance(value, AtLeastE):
        return {"at_least": _plain(value.precision)}
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    return str(value)


def _text(value: Any) -> str:
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, AtLeastE):
        return f">={value.precision}"
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_text(v) for v in value) + "]"
    if isinstance(value, dict):
        return "{" + ", ".join(f"{k}: {_text(v)}" for k, v in value.items()) + "}"
    if isinstance(value, float) and math.isinf(value):
        return "inf"
    return str(value)


class Report:
    def __init__(self, command: str):
        self.command = command
        self.records: List[dict] = []
        self.failed = False

    def add(self, kind: str, **values):
        self.records.append({"kind": kind, **values})

    def check(self, name: str, passed: bool, **values):
        self.add("check", name=name, passed=bool(passed), **values)
        if not passed:
            self.failed = True

    def machine(self) -> str:
        lines = [{"schema": SCHEMA, "version": SCHEMA_VERSION, "command": self.command}]
        lines += self.records
        lines.append({"kind": "result", "status": "FAIL" if self.failed else "PASS"})
        return "".join(json.dumps(_plain(r), sort_keys=True) + "\n" for r in lines)

    def text(self) -> str:
        out = [f"{self.command}:"]
        for r in self.records:
            kind = r["kind"]
            rest = {k: v for k, v in r.items() if k not in ("kind", "name", "passed")}
            body = ", ".join(f"{k} = {_text(v)}" for k, v in rest.items())
            if kind == "check":
                out.append(f"  [{'PASS' if r['passed'] else 'FAIL'}] {r['name']}" + (f": {body}" if body else ""))
            else:
                out.append(f"  {kind}: {body}")
        out.append("PASS" if not self.failed else "FAIL")
        return "\n".join(out) + "\n"


def _write_atomic(path: str, text: str):
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".report-")
    with os.fdopen(fd, "w", encoding="utf-8") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _rational(s: str) -> Fraction:
    try:
        return Fraction(s)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not an exact rational: {s!r}")


def _window(s: str):
    parts = s.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"window must be C,D: {s!r}")
    return tuple(_rational(x.strip()) for x in parts)


def _load(args):
    cf = fileio.load(args.file)
    if getattr(args, "precision", None) is not None:
        cf.complex = cf.complex.with_precision(args.precision)
    return cf


def _bars(bc):
    return [[b.birth, b.length] for b in bc.bars]


# commands ------------------------------------------------------------------


def run_validate(args, rep: Report):
    cf = _load(args)
    C = cf.complex
    v = validate(C)
    rep.add("complex", modulus=C.p, precision=C.precision, generators=C.n)
    rep.check("filtration, degree and d^2", v.ok, violations=v.violations[:20])
    if cf.sdr is not None:
        s = validate_sdr(cf.sdr)
        rep.check("retract identities", s.ok, violations=s.violations[:20])
    if cf.families is not None:
        U = cf.u_precision or 1
        try:
            assemble_equivariant(C, cf.families, U)
            rep.check("equivariant families", True, u_precision=U)
        except InconsistentFamilies as e:
            rep.check("equivariant families", False, u_order=e.u_order, t_order=e.t_order)
    if cf.xk_operators is not None:
        X = XkModule(C.p, C.precision, list(C.generators), cf.xk_operators)
        r = validate_xk(X)
        rep.check("X_k relations", r.ok, order=X.k, failing_orders=r.failing_orders)


def run_barcode(args, rep: Report):
    C = _load(args).complex
    bc = barcode(C, acyclic=args.acyclic)
    rep.add("barcode", free_rank=bc.free_rank, bars=_bars(bc), lengths=bc.lengths())
    if bc.lengths():
        depth, _ = boundary_depth(C)
        rep.add("boundary_depth", value=depth)


def run_strictify(args, rep: Report):
    cf = _load(args)
    C = cf.complex
    before = barcode(C)
    S, _ = strictify(C, cf.blocks)
    after = barcode(S)
    rep.add("strictified", generators_before=C.n, generators_after=S.n, strict=S.is_strict())
    rep.check("torsion preserved", before.lengths() == after.lengths(), before=before.lengths(), after=after.lengths())
    rep.check("output is strict", S.is_strict())
    if args.output:
        _write_atomic(args.output, fileio.complex_to_text(S))


def run_tate(args, rep: Report):
    C = _load(args).complex
    p = args.prime or C.p
    T = build_tate(C, p)
    bc = T.barcode()
    rep.add("tate", prime=p, convention=T.convention, generators=T.complex.n, free_rank=bc.free_rank, lengths=bc.lengths())
    rep.check("folded differential squares to zero", True)


def run_qf(args, rep: Report):
    C = _load(args).complex
    p = args.prime or C.p
    r = quasi_frobenius_check(C, p)
    rep.add("base", free_rank=r.base.free_rank, lengths=r.base.lengths())
    rep.check(
        "tate barcode is p-scaled and doubled",
        r.passed,
        expected=r.expected_bars,
        got=r.tate.lengths(),
        expected_free=r.expected_free,
        got_free=r.tate.free_rank,
    )


def run_equivariant(args, rep: Report):
    cf = _load(args)
    C = cf.complex
    U = args.u_order or cf.u_precision or 3
    if cf.families is not None:
        Eq = assemble_equivariant(C, cf.families, U)
        rep.check("families assemble", True, u_order=U)
        rep.add("equivariant_depth", value=equivariant_depth(Eq))
        return
    p = args.prime or C.p
    Eq = tate_model_equivariant(C, p, U, gauge_seed=args.seed)
    r = verify_depth_inequality(Eq.base, Eq, samples=args.samples, seed=args.seed or 0)
    rep.add("model", prime=p, u_order=U, gauge_seed=args.seed)
    rep.check("pointwise level bound", r.pointwise_sigma_ok and r.pointwise_tau_ok, chains=r.chains_checked)
    rep.check("boundary depth >= equivariant depth", r.delta1 >= r.equivariant_depth, delta1=r.delta1, equivariant_depth=r.equivariant_depth)


def run_promote(args, rep: Report):
    cf = _load(args)
    C = cf.complex
    if cf.xk_operators is None:
        raise InputError("file has no xk_operators section")
    X = XkModule(C.p, C.precision, list(C.generators), cf.xk_operators)
    rep.add("input", order=X.k, target=args.target)
    try:
        P = promote(X, args.target)
    except ObstructionNonexact as e:
        rep.check("promotion", False, failing_order=e.order, certificate_verified=e.verify(C.precision))
        return
    r = validate_xk(P)
    rep.check("promotion", r.ok, order=P.k, failing_orders=r.failing_orders)
    if args.output:
        cf.xk_operators = P.ops
        _write_atomic(args.output, fileio.dumps(cf))


def run_window(args, rep: Report):
    C = _load(args).complex
    c, d = args.source
    w = window_homology(C, c, d)
    rep.add("window", interval=[c, d], dimension=w.dimension)
    if w.interval_check is not None:
        rep.check("interval count agrees", w.consistent, predicted=w.interval_check)
    if args.target:
        c2, d2 = args.target
        w2 = window_homology(C, c2, d2)
        rank, _ = persistence_map(C, (c, d), (c2, d2))
        rep.add("window", interval=[c2, d2], dimension=w2.dimension)
        rep.add("map", rank=rank)


def run_gen(args, rep: Report):
    plant = [as_fraction(x) for x in args.plant.split(",")] if args.plant else None
    pool = [Fraction(k, 8) for k in range(1, 33)]
    actions = [Fraction(k, 2) for k in range(0, 5)] if args.actions else None
    C = random_complex(
        args.seed,
        args.n,
        pool,
        plant,
        p=args.modulus,
        precision=args.precision or 32,
        cancelling_pairs=args.cancelling,
        action_pool=actions,
        graded=args.graded,
    )
    text = fileio.complex_to_text(C)
    if args.output:
        _write_atomic(args.output, text)
        rep.add("written", path=args.output, generators=C.n)
    else:
        sys.stdout.write(text)
        rep.quiet = True


def run_scenario(args, rep: Report):
    cfg = ScenarioConfig(args.prime, args.C, args.eps, args.norm, args.seed or 0, args.u_order or 3)
    if args.file:
        cf = _load(args)
        C, blocks = cf.complex, cf.blocks
    else:
        C, blocks = model_complex(args.beta, args.precision or 4, args.prime), None
    r = cmd_scenario(cfg, C, blocks)
    for s in r.steps:
        rep.check(f"step {s.id}: {s.name}", s.passed, **s.values)
    if r.halted_at is not None:
        rep.add("halted", step=r.halted_at)


def run_primegap(args, rep: Report):
    if args.sweep:
        r = prime_gap_sweep(args.sweep, args.C, args.norm)
        rep.add("sweep", limit=args.sweep, **r)
        from_p = r["first_pass_from"]
        rep.check("gap condition holds from 11 on", from_p is not None and from_p <= 11, failures=r["failures"])
    else:
        r = next_prime_and_gap(args.prime, args.C, args.norm)
        rep.check("gap condition", r["gap_ok"], next_prime=r["next"], gap=r["gap"])


# parser --------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--precision", type=_rational, default=None, help="override the working precision E")
    common.add_argument("--u-order", dest="u_order", type=int, default=None, help="u-truncation order")
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--report", default=None, help="also write the machine report to this path")
    common.add_argument("--format", choices=("text", "machine"), default="text")

    ap = argparse.ArgumentParser(prog="novikov", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def cmd(name, func, help_, file=True):
        sp = sub.add_parser(name, parents=[common], help=help_)
        if file:
            sp.add_argument("file")
        sp.set_defaults(func=func)
        return sp

    cmd("validate", run_validate, "check a complex file and its attachments")
    sp = cmd("barcode", run_barcode, "barcode and boundary depth")
    sp.add_argument("--acyclic", action="store_true",
                    help="homology over Lambda vanishes: report apparent free summands as bars >= E")
    sp = cmd("strictify", run_strictify, "reduce to a strict complex")
    sp.add_argument("--output", default=None)
    sp = cmd("tate", run_tate, "folded Tate complex of the p-th tensor power")
    sp.add_argument("--prime", type=int, default=None)
    sp = cmd("qf", run_qf, "compare the Tate barcode with the p-scaled barcode")
    sp.add_argument("--prime", type=int, default=None)
    sp = cmd("equivariant", run_equivariant, "equivariant families or the p-th power model")
    sp.add_argument("--prime", type=int, default=None)
    sp.add_argument("--samples", type=int, default=500)
    sp = cmd("promote", run_promote, "promote X_k operators to a higher order")
    sp.add_argument("--target", type=int, required=True)
    sp.add_argument("--output", default=None)
    sp = cmd("window", run_window, "homology of an action window and the map between two windows")
    sp.add_argument("--from", dest="source", type=_window, required=True, metavar="C,D",
                    help="source window, e.g. --from=-1/10,2")
    sp.add_argument("--to", dest="target", type=_window, default=None, metavar="C,D")
    sp = cmd("gen", run_gen, "write a seeded random complex", file=False)
    sp.add_argument("--n", type=int, default=4)
    sp.add_argument("--plant", default=None, help="comma-separated bar lengths, e.g. 1/3,1")
    sp.add_argument("--modulus", type=int, default=2)
    sp.add_argument("--cancelling", type=int, default=0)
    sp.add_argument("--actions", action="store_true", help="draw random generator actions")
    sp.add_argument("--graded", action="store_true", help="Z/2-graded instance (needed for odd tensor powers)")
    sp.add_argument("--output", default=None)
    sp = cmd("scenario", run_scenario, "run the six-step pipeline", file=False)
    sp.add_argument("file", nargs="?", default=None)
    sp.add_argument("--prime", type=int, default=5)
    sp.add_argument("--C", type=_rational, default=Fraction(2, 5))
    sp.add_argument("--eps", type=_rational, default=Fraction(1, 10))
    sp.add_argument("--norm", type=_rational, default=Fraction(1, 4))
    sp.add_argument("--beta", type=_rational, default=Fraction(1))
    sp = cmd("primegap", run_primegap, "next prime and the gap condition", file=False)
    sp.add_argument("--prime", type=int, default=7)
    sp.add_argument("--sweep", type=int, default=None, help="check every prime below this bound")
    sp.add_argument("--C", type=_rational, default=Fraction(1))
    sp.add_argument("--norm", type=_rational, default=Fraction(1))
    return ap


def main(argv: Optional[List[str]] = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    rep = Report(args.command)
    rep.quiet = False
    try:
        args.func(args, rep)
    except (fileio.ParseError, InputError, OSError, ScenarioPrecondition, GradingRequired, PreconditionError, ValueError) as e:
        sys.stderr.write(f"error: {e}\n")
        return 2
    except NovikovError as e:
        rep.check("module error", False, error=f"{type(e).__name__}: {e}")
    if args.report:
        _write_atomic(args.report, rep.machine())
    if not rep.quiet:
        sys.stdout.write(rep.machine() if args.format == "machine" else rep.text())
    return 1 if rep.failed else 0


if __name__ == "__main__":
    sys.exit(main())
