"""JSON file format for complexes and their optional attachments.

Rationals are ``[numerator, denominator]`` pairs and Novikov terms are
``[coeff, num, den]`` triples; no floats appear anywhere.  Matrix entries are
stored as raw coefficients keyed by generator ids, ``{"from", "to", "terms"}``,
meaning ``d(from)`` contains ``to`` with that coefficient.

Layout::

    {"header": {"modulus": p, "precision": [n, d], "u_precision": U, "graded": b},
     "generators": [{"id": "x", "action": [0, 1], "degree": 0}, ...],
     "differential": [{"from": "x", "to": "y", "terms": [[1, 1, 2]]}, ...],
     "blocks": [["x", "y"], ...],
     "sdr": {"generators": [...], "differential": [...], "F": [...], "G": [...], "H": [...]},
     "equivariant_families": [{"alpha": 0, "i": 2, "m": 0, "entries": [...]}, ...],
     "xk_operators": [{"order": 0, "entries": [...]}, ...]}

Everything except header, generators and differential is optional.
"""
from __future__ import annotations

import json
import json.decoder
import json.scanner
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, List, Optional, Sequence, Tuple

from .complex import FilteredComplex, Generator
from .core import NovikovScalar, is_prime
from .matrix import Matrix
from .perturbation import SDRData

FORMAT_VERSION = 1


class ParseError(ValueError):
    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None, path: str = ""):
        where = f"line {line}, column {column}" if line is not None else "unknown position"
        loc = f" at {path}" if path else ""
        super().__init__(f"{where}{loc}: {message}")
        self.line = line
        self.column = column
        self.path = path
        self.message = message


@dataclass
class ComplexFile:
    complex: FilteredComplex
    u_precision: Optional[int] = None
    blocks: Optional[List[List[str]]] = None
    sdr: Optional[SDRData] = None
    families: Optional[Dict[Tuple[int, int, int], Matrix]] = None
    xk_operators: Optional[List[Matrix]] = None


# position-tracking JSON decoding ------------------------------------------


def _tracking_loads(text: str):
    """json.loads that also returns {id(container): offset} for objects and arrays."""
    positions: Dict[int, int] = {}
    keep: List[Any] = []
    dec = json.JSONDecoder()
    base_object = json.decoder.JSONObject
    base_array = json.decoder.JSONArray

    def parse_object(s_and_end, *args):
        start = s_and_end[1] - 1
        obj, end = base_object(s_and_end, *args)
        positions[id(obj)] = start
        keep.append(obj)
        return obj, end

    def parse_array(s_and_end, scan_once):
        start = s_and_end[1] - 1
        arr, end = base_array(s_and_end, scan_once)
        positions[id(arr)] = start
        keep.append(arr)
        return arr, end

    dec.parse_object = parse_object
    dec.parse_array = parse_array
    dec.scan_once = json.scanner.py_make_scanner(dec)
    try:
        obj = dec.decode(text)
    except json.JSONDecodeError as e:
        raise ParseError(e.msg, e.lineno, e.colno) from None
    return obj, positions, keep


class _Ctx:
    def __init__(self, text: str, positions: Dict[int, int]):
        self.text = text
        self.positions = positions

    def fail(self, node, path: str, message: str):
        off = self.positions.get(id(node))
        if off is None:
            raise ParseError(message, path=path)
        line = self.text.count("\n", 0, off) + 1
        col = off - (self.text.rfind("\n", 0, off) + 1) + 1
        raise ParseError(message, line, col, path)

    def need(self, node, key: str, path: str):
        if not isinstance(node, dict):
            self.fail(node, path, "expected an object")
        if key not in node:
            self.fail(node, path, f"missing field {key!r}")
        return node[key]

    def rational(self, value, node, path: str) -> Fraction:
        if isinstance(value, bool) or not (
            isinstance(value, list) and len(value) == 2 and all(isinstance(v, int) and not isinstance(v, bool) for v in value)
        ):
            self.fail(value if isinstance(value, list) else node, path, "expected a rational [num, den]")
        if value[1] == 0:
            self.fail(value, path, "zero denominator")
        return Fraction(value[0], value[1])

    def terms(self, value, node, path: str, p: int) -> NovikovScalar:
        if not isinstance(value, list):
            self.fail(node, path, "terms must be a list")
        out = []
        for k, t in enumerate(value):
            if not (isinstance(t, list) and len(t) == 3 and all(isinstance(v, int) and not isinstance(v, bool) for v in t)):
                self.fail(t if isinstance(t, list) else value, f"{path}[{k}]", "expected a term [coeff, num, den]")
            if t[2] == 0:
                self.fail(t, f"{path}[{k}]", "zero denominator")
            out.append((Fraction(t[1], t[2]), t[0]))
        return NovikovScalar(p, out)


def _parse_generators(ctx: _Ctx, gens, path: str) -> List[Generator]:
    if not isinstance(gens, list):
        ctx.fail(gens, path, "generators must be a list")
    out = []
    for k, g in enumerate(gens):
        gp = f"{path}[{k}]"
        gid = ctx.need(g, "id", gp)
        if not isinstance(gid, str):
            ctx.fail(g, gp, "generator id must be a string")
        action = ctx.rational(g.get("action", [0, 1]), g, gp + ".action")
        degree = g.get("degree", 0)
        if not isinstance(degree, int) or isinstance(degree, bool):
            ctx.fail(g, gp + ".degree", "degree must be an integer")
        out.append(Generator(gid, action, degree % 2))
    ids = [g.id for g in out]
    if len(set(ids)) != len(ids):
        ctx.fail(gens, path, "duplicate generator ids")
    return out


def _parse_entries(ctx: _Ctx, entries, path: str, p: int, src: Sequence[Generator], tgt: Sequence[Generator]) -> Matrix:
    """Raw entries keyed by ids, converted to normalized coordinates."""
    if not isinstance(entries, list):
        ctx.fail(entries, path, "entries must be a list")
    si = {g.id: i for i, g in enumerate(src)}
    ti = {g.id: i for i, g in enumerate(tgt)}
    M = Matrix(p, len(tgt), len(src))
    for k, e in enumerate(entries):
        ep = f"{path}[{k}]"
        a = ctx.need(e, "from", ep)
        b = ctx.need(e, "to", ep)
        if a not in si:
            ctx.fail(e, ep + ".from", f"unknown generator {a!r}")
        if b not in ti:
            ctx.fail(e, ep + ".to", f"unknown generator {b!r}")
        v = ctx.terms(ctx.need(e, "terms", ep), e, ep + ".terms", p)
        i, j = ti[b], si[a]
        v = v.shift(tgt[i].action - src[j].action)
        if (i, j) in M.data:
            v = M.data[(i, j)] + v
        if v.is_zero():
            M.data.pop((i, j), None)
        else:
            M.data[(i, j)] = v
    return M


def _from_doc(text: str) -> ComplexFile:
    doc, positions, _keep = _tracking_loads(text)
    ctx = _Ctx(text, positions)
    if not isinstance(doc, dict):
        ctx.fail(doc, "", "top level must be an object")
    header = ctx.need(doc, "header", "")
    p = ctx.need(header, "modulus", "header")
    if not isinstance(p, int) or isinstance(p, bool) or not is_prime(p):
        ctx.fail(header, "header.modulus", "modulus must be a prime integer")
    E = ctx.rational(ctx.need(header, "precision", "header"), header, "header.precision")
    if E <= 0:
        ctx.fail(header, "header.precision", "precision must be positive")
    U = header.get("u_precision")
    if U is not None and (not isinstance(U, int) or isinstance(U, bool) or U < 1):
        ctx.fail(header, "header.u_precision", "u_precision must be a positive integer")
    graded = bool(header.get("graded", False))
    gens = _parse_generators(ctx, ctx.need(doc, "generators", ""), "generators")
    D = _parse_entries(ctx, ctx.need(doc, "differential", ""), "differential", p, gens, gens)
    C = FilteredComplex.from_normalized(p, E, gens, D, graded)
    out = ComplexFile(C, U)
    ids = {g.id for g in gens}
    if "blocks" in doc:
        blocks = doc["blocks"]
        if not isinstance(blocks, list) or not all(isinstance(b, list) for b in blocks):
            ctx.fail(blocks, "blocks", "blocks must be a list of id lists")
        for k, b in enumerate(blocks):
            for g in b:
                if g not in ids:
                    ctx.fail(b, f"blocks[{k}]", f"unknown generator {g!r}")
        out.blocks = [list(b) for b in blocks]
    if "sdr" in doc:
        s = doc["sdr"]
        small = _parse_generators(ctx, ctx.need(s, "generators", "sdr"), "sdr.generators")
        dN = _parse_entries(ctx, s.get("differential", []), "sdr.differential", p, small, small)
        N = FilteredComplex.from_normalized(p, E, small, dN, graded)
        F = _parse_entries(ctx, s.get("F", []), "sdr.F", p, gens, small)
        G = _parse_entries(ctx, s.get("G", []), "sdr.G", p, small, gens)
        H = _parse_entries(ctx, s.get("H", []), "sdr.H", p, gens, gens)
        out.sdr = SDRData(C, N, F, G, H)
    if "equivariant_families" in doc:
        fams = doc["equivariant_families"]
        if not isinstance(fams, list):
            ctx.fail(fams, "equivariant_families", "expected a list")
        out.families = {}
        for k, f in enumerate(fams):
            fp_ = f"equivariant_families[{k}]"
            key = []
            for name in ("alpha", "i", "m"):
                v = ctx.need(f, name, fp_)
                if not isinstance(v, int) or isinstance(v, bool) or v < 0:
                    ctx.fail(f, f"{fp_}.{name}", "expected a non-negative integer")
                key.append(v)
            if key[0] not in (0, 1):
                ctx.fail(f, fp_ + ".alpha", "alpha must be 0 or 1")
            M = _parse_entries(ctx, ctx.need(f, "entries", fp_), fp_ + ".entries", p, gens, gens)
            out.families[tuple(key)] = M
    if "xk_operators" in doc:
        ops = doc["xk_operators"]
        if not isinstance(ops, list):
            ctx.fail(ops, "xk_operators", "expected a list")
        by_order = {}
        for k, o in enumerate(ops):
            op_ = f"xk_operators[{k}]"
            order = ctx.need(o, "order", op_)
            if not isinstance(order, int) or isinstance(order, bool) or order < 0 or order in by_order:
                ctx.fail(o, op_ + ".order", "orders must be distinct non-negative integers")
            by_order[order] = _parse_entries(ctx, ctx.need(o, "entries", op_), op_ + ".entries", p, gens, gens)
        top = max(by_order) if by_order else -1
        out.xk_operators = [by_order.get(i, Matrix(p, len(gens), len(gens))) for i in range(top + 1)]
    return out


def loads(text: str) -> ComplexFile:
    return _from_doc(text)


def load(path: str) -> ComplexFile:
    with open(path, "r", encoding="utf-8") as fh:
        return loads(fh.read())


# serialization --------------------------------------------------------------


def _rat(x: Fraction) -> List[int]:
    x = Fraction(x)
    return [x.numerator, x.denominator]


def _gens_doc(gens: Sequence[Generator]) -> List[dict]:
    return [{"id": g.id, "action": _rat(g.action), "degree": g.degree} for g in gens]


def _entries_doc(M: Matrix, src: Sequence[Generator], tgt: Sequence[Generator]) -> List[dict]:
    out = []
    for (i, j) in sorted(M.data, key=lambda k: (k[1], k[0])):
        v = M.data[(i, j)].shift(src[j].action - tgt[i].action)
        out.append(
            {"from": src[j].id, "to": tgt[i].id, "terms": [[c, e.numerator, e.denominator] for e, c in v.terms]}
        )
    return out


def to_doc(cf: ComplexFile) -> dict:
    C = cf.complex
    header = {"modulus": C.p, "precision": _rat(C.precision), "graded": bool(C.graded)}
    if cf.u_precision is not None:
        header["u_precision"] = cf.u_precision
    gens = list(C.generators)
    doc = {
        "header": header,
        "generators": _gens_doc(gens),
        "differential": _entries_doc(C.normalized_matrix(), gens, gens),
    }
    if cf.blocks is not None:
        doc["blocks"] = [list(b) for b in cf.blocks]
    if cf.sdr is not None:
        S = cf.sdr
        small = list(S.N.generators)
        doc["sdr"] = {
            "generators": _gens_doc(small),
            "differential": _entries_doc(S.N.normalized_matrix(), small, small),
            "F": _entries_doc(S.F, gens, small),
            "G": _entries_doc(S.G, small, gens),
            "H": _entries_doc(S.H, gens, gens),
        }
    if cf.families is not None:
        doc["equivariant_families"] = [
            {"alpha": a, "i": i, "m": m, "entries": _entries_doc(cf.families[(a, i, m)], gens, gens)}
            for (a, i, m) in sorted(cf.families)
        ]
    if cf.xk_operators is not None:
        doc["xk_operators"] = [
            {"order": k, "entries": _entries_doc(M, gens, gens)} for k, M in enumerate(cf.xk_operators)
        ]
    return doc


def dumps(cf: ComplexFile) -> str:
    """Canonical text: fixed key order, sorted entries, reduced rationals."""
    return _render(to_doc(cf), 0) + "\n"


def _render(value, depth: int) -> str:
    """Objects and lists of the top two levels are spread one item per line."""
    compact = lambda v: json.dumps(v, separators=(", ", ": "))
    if depth > 1 or not isinstance(value, (dict, list)) or not value:
        return compact(value)
    pad = " " * (depth + 1)
    end = " " * depth
    if isinstance(value, dict):
        if depth == 1 and not any(isinstance(v, list) for v in value.values()):
            return compact(value)
        items = [f"{pad}{json.dumps(k)}: {_render(v, depth + 1)}" for k, v in value.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    items = [pad + compact(v) for v in value]
    return "[\n" + ",\n".join(items) + "\n" + end + "]"


def dump(cf: ComplexFile, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(cf))


def complex_to_text(C: FilteredComplex, **extra) -> str:
    return dumps(ComplexFile(C, **extra))
