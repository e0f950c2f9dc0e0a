"""Sparse matrices with NovikovScalar entries.

Entries are stored exactly (infinite precision) and products can be
truncated at a caller-supplied exponent bound.  Every algorithm in the
package that multiplies matrices works in normalized coordinates, where all
entries lie in Lambda_0 and dropping exponents >= E is sound.
"""
from __future__ import annotations

from fractions import Fraction
from math import lcm
from typing import Dict, Iterable, Iterator, Optional, Tuple

from .core import ModulusMismatch, NovikovScalar, as_fraction


class Matrix:
    __slots__ = ("p", "rows", "cols", "data")

    def __init__(self, p: int, rows: int, cols: int, data: Optional[Dict[Tuple[int, int], NovikovScalar]] = None):
        self.p = p
        self.rows = rows
        self.cols = cols
        self.data: Dict[Tuple[int, int], NovikovScalar] = {}
        if data:
            for (i, j), v in data.items():
                if not (0 <= i < rows and 0 <= j < cols):
                    raise IndexError(f"entry ({i}, {j}) outside {rows}x{cols}")
                if v.p != p:
                    raise ModulusMismatch(f"F_{v.p} entry in F_{p} matrix")
                if not v.is_zero():
                    self.data[(i, j)] = NovikovScalar._raw(p, v.terms, None)

    @classmethod
    def zero(cls, p, rows, cols):
        return cls(p, rows, cols)

    @classmethod
    def identity(cls, p, n):
        one = NovikovScalar.one(p)
        return cls(p, n, n, {(i, i): one for i in range(n)})

    @classmethod
    def from_ints(cls, p, rows):
        """Dense integer rows (valuation-zero constants)."""
        data = {}
        for i, row in enumerate(rows):
            for j, c in enumerate(row):
                if c % p:
                    data[(i, j)] = NovikovScalar.monomial(c, 0, p)
        return cls(p, len(rows), len(rows[0]) if rows else 0, data)

    def __getitem__(self, key) -> NovikovScalar:
        v = self.data.get(key)
        return v if v is not None else NovikovScalar.zero(self.p)

    def items(self) -> Iterator:
        return iter(self.data.items())

    def copy(self) -> "Matrix":
        m = Matrix(self.p, self.rows, self.cols)
        m.data = dict(self.data)
        return m

    def _check(self, other: "Matrix"):
        if self.p != other.p:
            raise ModulusMismatch(f"F_{self.p} vs F_{other.p}")

    def __add__(self, other: "Matrix") -> "Matrix":
        self._check(other)
        if (self.rows, self.cols) != (other.rows, other.cols):
            raise ValueError("shape mismatch")
        out = dict(self.data)
        for k, v in other.data.items():
            s = out[k] + v if k in out else v
            if s.is_zero():
                out.pop(k, None)
            else:
                out[k] = s
        m = Matrix(self.p, self.rows, self.cols)
        m.data = out
        return m

    def __neg__(self) -> "Matrix":
        m = Matrix(self.p, self.rows, self.cols)
        m.data = {k: -v for k, v in self.data.items()}
        return m

    def __sub__(self, other: "Matrix") -> "Matrix":
        return self + (-other)

    def matmul(self, other: "Matrix", E=None) -> "Matrix":
        """Product, dropping exponents >= E when E is given."""
        self._check(other)
        if self.cols != other.rows:
            raise ValueError("shape mismatch")
        E = None if E is None else as_fraction(E)
        fast = _grid_matmul(self, other, E)
        if fast is not None:
            return fast
        by_row: Dict[int, list] = {}
        for (k, j), v in other.data.items():
            by_row.setdefault(k, []).append((j, v))
        acc: Dict[Tuple[int, int], NovikovScalar] = {}
        for (i, k), a in self.data.items():
            for j, b in by_row.get(k, ()):
                prod = a * b
                if E is not None:
                    prod = _trunc(prod, E)
                    if prod.is_zero():
                        continue
                key = (i, j)
                acc[key] = acc[key] + prod if key in acc else prod
        m = Matrix(self.p, self.rows, other.cols)
        m.data = {k: v for k, v in acc.items() if not v.is_zero()}
        return m

    def __matmul__(self, other):
        return self.matmul(other)

    def scale(self, c: NovikovScalar, E=None) -> "Matrix":
        m = Matrix(self.p, self.rows, self.cols)
        out = {}
        for k, v in self.data.items():
            w = v * c
            if E is not None:
                w = _trunc(w, as_fraction(E))
            if not w.is_zero():
                out[k] = w
        m.data = out
        return m

    def truncate(self, E) -> "Matrix":
        E = as_fraction(E)
        m = Matrix(self.p, self.rows, self.cols)
        m.data = {k: w for k, w in ((k, _trunc(v, E)) for k, v in self.data.items()) if not w.is_zero()}
        return m

    def is_zero_mod(self, E) -> bool:
        return not self.truncate(E).data

    def nonzero_mod(self, E) -> Dict[Tuple[int, int], NovikovScalar]:
        return self.truncate(E).data

    def transpose(self) -> "Matrix":
        m = Matrix(self.p, self.cols, self.rows)
        m.data = {(j, i): v for (i, j), v in self.data.items()}
        return m

    def min_valuation(self) -> Optional[Fraction]:
        vals = [v.valuation() for v in self.data.values()]
        return min(vals) if vals else None

    def submatrix(self, rows: Iterable[int], cols: Iterable[int]) -> "Matrix":
        rows = list(rows)
        cols = list(cols)
        ri = {r: i for i, r in enumerate(rows)}
        ci = {c: j for j, c in enumerate(cols)}
        m = Matrix(self.p, len(rows), len(cols))
        m.data = {(ri[i], ci[j]): v for (i, j), v in self.data.items() if i in ri and j in ci}
        return m

    def apply(self, vec: Dict[int, NovikovScalar], E=None) -> Dict[int, NovikovScalar]:
        out: Dict[int, NovikovScalar] = {}
        for (i, j), a in self.data.items():
            x = vec.get(j)
            if x is None or x.is_zero():
                continue
            w = a * x
            if E is not None:
                w = _trunc(w, as_fraction(E))
            out[i] = out[i] + w if i in out else w
        return {i: v for i, v in out.items() if not v.is_zero()}

    def to_dense(self):
        return [[self[(i, j)] for j in range(self.cols)] for i in range(self.rows)]

    def __eq__(self, other):
        if not isinstance(other, Matrix):
            return NotImplemented
        return (
            self.p == other.p
            and (self.rows, self.cols) == (other.rows, other.cols)
            and {k: v.terms for k, v in self.data.items()} == {k: v.terms for k, v in other.data.items()}
        )

    def __repr__(self):
        return f"Matrix(F_{self.p}, {self.rows}x{self.cols}, nnz={len(self.data)})"


def _grid_matmul(A: "Matrix", B: "Matrix", E: Optional[Fraction]) -> Optional["Matrix"]:
    """Product on the integer exponent grid; None when some exponent is negative."""
    N = 1 if E is None else E.denominator
    top = 0
    for M in (A, B):
        for v in M.data.values():
            if not v.terms:
                continue
            if v.terms[0][0] < 0:
                return None
            for e, _ in v.terms:
                if e.denominator != 1 and N % e.denominator:
                    N = lcm(N, e.denominator)
            top = max(top, v.terms[-1][0])
    K = int(E * N) if E is not None else int(2 * top * N) + 1
    p = A.p

    def conv(M):
        out = {}
        for key, v in M.data.items():
            row = []
            for e, c in v.terms:
                k = e.numerator * (N // e.denominator)
                if k >= K:
                    break
                row.append((k, c))
            out[key] = row
        return out

    a, b = conv(A), conv(B)
    by_row: Dict[int, list] = {}
    for (k, j), v in b.items():
        if v:
            by_row.setdefault(k, []).append((j, v))
    acc: Dict[Tuple[int, int], Dict[int, int]] = {}
    for (i, k), x in a.items():
        if not x:
            continue
        for j, y in by_row.get(k, ()):
            d = acc.setdefault((i, j), {})
            for e1, c1 in x:
                lim = K - e1
                for e2, c2 in y:
                    if e2 >= lim:
                        break
                    e = e1 + e2
                    d[e] = (d.get(e, 0) + c1 * c2) % p
    m = Matrix(p, A.rows, B.cols)
    for key, d in acc.items():
        terms = tuple((_frac(e, N), c) for e, c in sorted(d.items()) if c)
        if terms:
            m.data[key] = NovikovScalar._raw(p, terms, None)
    return m


_FRAC_CACHE: Dict[Tuple[int, int], Fraction] = {}


def _frac(e: int, N: int) -> Fraction:
    key = (e, N)
    f = _FRAC_CACHE.get(key)
    if f is None:
        f = _FRAC_CACHE[key] = Fraction(e, N)
    return f


def _trunc(a: NovikovScalar, E: Fraction) -> NovikovScalar:
    if a.terms and a.terms[-1][0] >= E:
        return NovikovScalar._raw(a.p, tuple(t for t in a.terms if t[0] < E), None)
    return a


def block_matrix(p: int, blocks, row_sizes, col_sizes) -> Matrix:
    """Assemble a matrix from a grid of blocks (None means zero)."""
    roff = [0]
    for s in row_sizes:
        roff.append(roff[-1] + s)
    coff = [0]
    for s in col_sizes:
        coff.append(coff[-1] + s)
    m = Matrix(p, roff[-1], coff[-1])
    for bi, row in enumerate(blocks):
        for bj, blk in enumerate(row):
            if blk is None:
                continue
            if (blk.rows, blk.cols) != (row_sizes[bi], col_sizes[bj]):
                raise ValueError("block shape mismatch")
            for (i, j), v in blk.data.items():
                m.data[(roff[bi] + i, coff[bj] + j)] = v
    return m


def grid_of(mats, E) -> int:
    """Common exponent denominator of a family of Lambda_0 matrices and E."""
    E = as_fraction(E)
    N = E.denominator
    for M in mats:
        for v in M.data.values():
            for e, _ in v.terms:
                if e < 0:
                    raise ValueError("negative exponent outside Lambda_0")
                if N % e.denominator:
                    N = lcm(N, e.denominator)
    return N


def to_grid(M: "Matrix", N: int, K: int):
    """Dense list-of-lists of {int exponent: coeff} polynomials, truncated at t^K."""
    out = [[{} for _ in range(M.cols)] for _ in range(M.rows)]
    for (i, j), v in M.data.items():
        d = {}
        for e, c in v.terms:
            k = e.numerator * (N // e.denominator)
            if k >= K:
                break
            d[k] = c
        out[i][j] = d
    return out


def from_grid(A, p: int, N: int, rows: int, cols: int) -> "Matrix":
    m = Matrix(p, rows, cols)
    for i in range(rows):
        for j in range(cols):
            d = A[i][j]
            if d:
                m.data[(i, j)] = NovikovScalar._raw(
                    p, tuple((_frac(e, N), c) for e, c in sorted(d.items()) if c), None
                )
    m.data = {k: v for k, v in m.data.items() if v.terms}
    return m
