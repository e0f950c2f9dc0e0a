"""Integer-exponent engine for matrices over F_p[t]/(t^K).

When every exponent of a computation lies on the grid (1/N)Z, the
restriction of Lambda_0 is the discrete valuation ring F_p[[t]] with
t = T^(1/N), and truncation at T^E becomes truncation at t^K, K = E*N.
Polynomials are dicts {exponent: coefficient}; the empty dict is zero.
"""
from __future__ import annotations

from fractions import Fraction
from math import lcm
from typing import Dict, List, Optional, Sequence

from .core import NovikovScalar, PrecisionExhausted

Poly = Dict[int, int]


class Lattice:
    """Arithmetic in F_p[t]/(t^K)."""

    def __init__(self, p: int, K: int):
        self.p = p
        self.K = K

    def add(self, a: Poly, b: Poly) -> Poly:
        if not b:
            return a
        if not a:
            return b
        p = self.p
        out = dict(a)
        for e, c in b.items():
            v = (out.get(e, 0) + c) % p
            if v:
                out[e] = v
            else:
                out.pop(e, None)
        return out

    def sub(self, a: Poly, b: Poly) -> Poly:
        if not b:
            return a
        p = self.p
        out = dict(a)
        for e, c in b.items():
            v = (out.get(e, 0) - c) % p
            if v:
                out[e] = v
            else:
                out.pop(e, None)
        return out

    def neg(self, a: Poly) -> Poly:
        p = self.p
        return {e: (-c) % p for e, c in a.items()}

    def scale(self, a: Poly, c: int) -> Poly:
        c %= self.p
        if not c:
            return {}
        p = self.p
        return {e: (x * c) % p for e, x in a.items()}

    def mul(self, a: Poly, b: Poly) -> Poly:
        if not a or not b:
            return {}
        p, K = self.p, self.K
        if len(a) > len(b):
            a, b = b, a
        out: Poly = {}
        bi = sorted(b.items())
        for e1, c1 in a.items():
            lim = K - e1
            for e2, c2 in bi:
                if e2 >= lim:
                    break
                e = e1 + e2
                out[e] = (out.get(e, 0) + c1 * c2) % p
        return {e: c for e, c in out.items() if c}

    def shift(self, a: Poly, k: int) -> Poly:
        K = self.K
        return {e + k: c for e, c in a.items() if e + k < K}

    @staticmethod
    def val(a: Poly) -> Optional[int]:
        return min(a) if a else None

    def inv_unit(self, a: Poly, prec: Optional[int] = None) -> Poly:
        """Inverse of a valuation-zero element modulo t^prec (default K)."""
        prec = self.K if prec is None else prec
        p = self.p
        c0 = a.get(0, 0)
        if not c0:
            raise ZeroDivisionError("not a unit")
        c0inv = pow(c0, -1, p)
        rest = sorted((e, c) for e, c in a.items() if 0 < e < prec)
        if not rest:
            return {0: c0inv}
        # coefficients of the inverse by the usual power-series recursion
        inv = [0] * prec
        inv[0] = c0inv
        for n in range(1, prec):
            s = 0
            for e, c in rest:
                if e > n:
                    break
                s += c * inv[n - e]
            inv[n] = (-s * c0inv) % p
        return {e: c for e, c in enumerate(inv) if c}

    def div(self, a: Poly, b: Poly) -> Poly:
        """Some q with q*b = a modulo t^K; requires val(b) <= val(a)."""
        if not a:
            return {}
        v = min(b)
        w = min(a)
        if w < v:
            raise ArithmeticError("divisor valuation exceeds dividend valuation")
        bu = {e - v: c for e, c in b.items()}
        if len(bu) == 1:
            c = pow(bu[0], -1, self.p)
            return {e - v: (x * c) % self.p for e, x in a.items()}
        # q is only needed modulo t^(K-v)
        prec = self.K - v
        inv = self.inv_unit(bu, prec)
        au = {e - v: c for e, c in a.items()}
        sub = Lattice(self.p, prec)
        return sub.mul(au, inv)


def grid_denominator(values: Sequence[Fraction]) -> int:
    N = 1
    for v in values:
        N = lcm(N, v.denominator)
    return N


def scalar_to_poly(a: NovikovScalar, N: int, K: int) -> Poly:
    out: Poly = {}
    for e, c in a.terms:
        k = e * N
        if k.denominator != 1:
            raise ValueError("exponent off the lattice grid")
        k = int(k)
        if k < 0:
            raise ValueError("negative exponent outside Lambda_0")
        if k < K:
            out[k] = c
    return out


def poly_to_scalar(a: Poly, p: int, N: int) -> NovikovScalar:
    return NovikovScalar(p, [(Fraction(e, N), c) for e, c in a.items()])


def identity(n: int) -> List[List[Poly]]:
    return [[{0: 1} if i == j else {} for j in range(n)] for i in range(n)]


class SNFResult:
    """Outcome of :func:`snf`: ``P @ A @ Q = D`` with D having one entry per pivot.

    ``pivots`` lists ``(row, col, valuation)`` in the order found; valuations
    are non-decreasing.  ``P``/``Pinv``/``Q``/``Qinv`` are present when tracked.
    """

    def __init__(self, pivots, P, Pinv, Q, Qinv, reduced):
        self.pivots = pivots
        self.P = P
        self.Pinv = Pinv
        self.Q = Q
        self.Qinv = Qinv
        self.reduced = reduced


def snf(
    L: Lattice,
    A: List[List[Poly]],
    track_rows: bool = False,
    track_cols: bool = False,
) -> SNFResult:
    """Smith normal form by minimal-valuation pivoting.

    Ties are broken by the lowest (row, column).  No physical swaps are made:
    pivot rows/columns are marked as used, so indices keep referring to the
    input basis positions.
    """
    nr = len(A)
    nc = len(A[0]) if nr else 0
    A = [[dict(x) for x in row] for row in A]
    P = identity(nr) if track_rows else None
    Pinv = identity(nr) if track_rows else None
    Q = identity(nc) if track_cols else None
    Qinv = identity(nc) if track_cols else None
    free_rows = set(range(nr))
    free_cols = set(range(nc))
    pivots = []
    while True:
        best = None
        for i in sorted(free_rows):
            row = A[i]
            for j in sorted(free_cols):
                x = row[j]
                if x:
                    v = min(x)
                    if best is None or v < best[0]:
                        best = (v, i, j)
                        if v == 0:
                            break
            if best is not None and best[0] == 0:
                break
        if best is None:
            break
        v, r, c = best
        b = A[r][c]
        # clear column c
        for i in range(nr):
            if i == r or not A[i][c]:
                continue
            q = L.div(A[i][c], b)
            Ai, Ar = A[i], A[r]
            for j in free_cols:
                if Ar[j]:
                    Ai[j] = L.sub(Ai[j], L.mul(q, Ar[j]))
            Ai[c] = {}
            if track_rows:
                Pi, Pr = P[i], P[r]
                for j in range(nr):
                    if Pr[j]:
                        Pi[j] = L.sub(Pi[j], L.mul(q, Pr[j]))
                for k in range(nr):
                    if Pinv[k][i]:
                        Pinv[k][r] = L.add(Pinv[k][r], L.mul(q, Pinv[k][i]))
        # clear row r
        for j in list(free_cols):
            if j == c or not A[r][j]:
                continue
            q = L.div(A[r][j], b)
            A[r][j] = {}
            if track_cols:
                for k in range(nc):
                    if Q[k][c]:
                        Q[k][j] = L.sub(Q[k][j], L.mul(q, Q[k][c]))
                Qc, Qj = Qinv[c], Qinv[j]
                for k in range(nc):
                    if Qj[k]:
                        Qc[k] = L.add(Qc[k], L.mul(q, Qj[k]))
        free_rows.discard(r)
        free_cols.discard(c)
        pivots.append((r, c, v))
    return SNFResult(pivots, P, Pinv, Q, Qinv, A)


def mat_mul(L: Lattice, A: List[List[Poly]], B: List[List[Poly]]) -> List[List[Poly]]:
    n = len(A)
    m = len(B[0]) if B else 0
    inner = len(B)
    out = [[{} for _ in range(m)] for _ in range(n)]
    for i in range(n):
        Ai = A[i]
        for k in range(inner):
            a = Ai[k]
            if not a:
                continue
            Bk = B[k]
            oi = out[i]
            for j in range(m):
                if Bk[j]:
                    oi[j] = L.add(oi[j], L.mul(a, Bk[j]))
    return out


def mat_vec(L: Lattice, A: List[List[Poly]], v: List[Poly]) -> List[Poly]:
    out = []
    for row in A:
        acc: Poly = {}
        for a, x in zip(row, v):
            if a and x:
                acc = L.add(acc, L.mul(a, x))
        out.append(acc)
    return out


def require_grid(E: Fraction, N: int) -> int:
    K = E * N
    if K.denominator != 1:
        raise PrecisionExhausted("precision is not on the exponent grid")
    return int(K)


def mat_add(L: Lattice, A, B):
    return [[L.add(a, b) for a, b in zip(ra, rb)] for ra, rb in zip(A, B)]


def mat_sub(L: Lattice, A, B):
    return [[L.sub(a, b) for a, b in zip(ra, rb)] for ra, rb in zip(A, B)]


def zeros(rows: int, cols: int):
    return [[{} for _ in range(cols)] for _ in range(rows)]


def is_zero(A) -> bool:
    return not any(x for row in A for x in row)


def nonzero_entries(A):
    return [(i, j) for i, row in enumerate(A) for j, x in enumerate(row) if x]


# dense numpy representation, used when K is small ------------------------

DENSE_LIMIT = 512


def to_dense(A, K: int):
    import numpy as np

    n = len(A)
    m = len(A[0]) if n else 0
    out = np.zeros((n, m, K), dtype=np.int64)
    for i, row in enumerate(A):
        for j, x in enumerate(row):
            for e, c in x.items():
                if e < K:
                    out[i, j, e] = c
    return out


def from_dense(arr):
    n, m, _ = arr.shape
    out = [[{} for _ in range(m)] for _ in range(n)]
    for i, j, e in zip(*arr.nonzero()):
        out[i][j][int(e)] = int(arr[i, j, e])
    return out


def dense_mm(A, B, p: int):
    """Product of (n, m, K) and (m, l, K) polynomial matrices modulo (p, t^K)."""
    import numpy as np

    n, m, K = A.shape
    l = B.shape[1]
    C = np.zeros((n, l, K), dtype=np.int64)
    sa = np.nonzero(A.any(axis=(0, 1)))[0]
    sb = np.nonzero(B.any(axis=(0, 1)))[0]
    if not len(sa) or not len(sb):
        return C
    # iterate over the sparser side
    if len(sa) <= len(sb):
        for s in sa:
            C[:, :, s:] += np.tensordot(A[:, :, s], B[:, :, : K - s], axes=(1, 0))
    else:
        for s in sb:
            C[:, :, s:] += np.tensordot(A[:, :, : K - s], B[:, :, s], axes=(1, 0)).transpose(0, 2, 1)
    return C % p
