"""X_k-modules, their morphisms and homotopies, and promotion by obstruction solving.

An X_k-module carries operators d_0..d_k with sum_{i+j=m} d_i d_j = 0 for
every m <= k.  All operators are treated as odd, so the relations carry no
signs.  Operators are matrices over Lambda_0 in normalized coordinates and
the relations are checked modulo T^E.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import fp
from ._lattice import Lattice, snf
from .complex import FilteredComplex, Generator
from .core import NovikovError, NovikovScalar, as_fraction
from .matrix import Matrix, from_grid, grid_of, to_grid


class ObstructionNonexact(NovikovError):
    """The equation for the next operator has no solution over Lambda_0 / T^E.

    ``certificate`` is a functional phi (an n x n matrix, paired entrywise)
    with phi(L(x)) = 0 for every x and phi(rhs) != 0 modulo T^E, where L is
    the linear map being inverted.
    """

    def __init__(self, order: int, certificate: Matrix, rhs: Matrix, operator):
        super().__init__(f"obstruction at order {order} is not exact")
        self.order = order
        self.certificate = certificate
        self.rhs = rhs
        self.operator = operator

    def verify(self, E) -> bool:
        return _certificate_holds(self.certificate, self.operator, self.rhs, E)


class OrderMismatch(NovikovError):
    pass


class ObstructionNotCycle(NovikovError):
    pass


@dataclass
class XkModule:
    p: int
    precision: Fraction
    generators: List[Generator]
    ops: List[Matrix]

    @property
    def k(self) -> int:
        return len(self.ops) - 1

    @property
    def n(self) -> int:
        return len(self.generators)

    def truncated(self, k: int) -> "XkModule":
        return XkModule(self.p, self.precision, list(self.generators), list(self.ops[: k + 1]))


@dataclass
class XkReport:
    residuals: Dict[int, Dict[Tuple[int, int], NovikovScalar]]

    @property
    def failing_orders(self) -> List[int]:
        return sorted(m for m, r in self.residuals.items() if r)

    @property
    def ok(self) -> bool:
        return not self.failing_orders


def _conv(A: Sequence[Matrix], B: Sequence[Matrix], m: int, E, lo: int = 0) -> Matrix:
    """sum_{i+j=m, i,j >= lo} A_i B_j."""
    out = Matrix(A[0].p, A[0].rows, B[0].cols)
    for i in range(lo, m - lo + 1):
        j = m - i
        if i < len(A) and j < len(B):
            out = out + A[i].matmul(B[j], E)
    return out


def validate_xk(X: XkModule) -> XkReport:
    E = X.precision
    return XkReport({m: _conv(X.ops, X.ops, m, E).nonzero_mod(E) for m in range(X.k + 1)})


@dataclass
class XkMorphism:
    source: XkModule
    target: XkModule
    maps: List[Matrix]

    @property
    def k(self) -> int:
        return len(self.maps) - 1

    def residuals(self) -> Dict[int, dict]:
        E = min(self.source.precision, self.target.precision)
        d, delta, f = self.source.ops, self.target.ops, self.maps
        return {m: (_conv(delta, f, m, E) - _conv(f, d, m, E)).nonzero_mod(E) for m in range(self.k + 1)}

    def is_valid(self) -> bool:
        return not any(self.residuals().values())


def identity_morphism(X: XkModule) -> XkMorphism:
    zero = Matrix(X.p, X.n, X.n)
    return XkMorphism(X, X, [Matrix.identity(X.p, X.n)] + [zero] * X.k)


def compose(f: XkMorphism, g: XkMorphism) -> XkMorphism:
    """(f o g)_i = sum_{j+l=i} f_j g_l, for g: A -> B and f: B -> C."""
    if f.k != g.k:
        raise OrderMismatch(f"orders {f.k} and {g.k} differ")
    if g.target is not f.source and g.target.n != f.source.n:
        raise OrderMismatch("g's target is not f's source")
    E = min(f.source.precision, g.source.precision, f.target.precision)
    maps = [_conv(f.maps, g.maps, m, E) for m in range(f.k + 1)]
    h = XkMorphism(g.source, f.target, maps)
    if not h.is_valid():
        raise NovikovError("composite fails the morphism relations")
    return h


@dataclass
class XkHomotopy:
    f: XkMorphism
    g: XkMorphism
    maps: List[Matrix]

    def residuals(self) -> Dict[int, dict]:
        src, tgt = self.f.source, self.f.target
        E = min(src.precision, tgt.precision)
        H = self.maps
        out = {}
        for m in range(self.f.k + 1):
            lhs = self.f.maps[m] - self.g.maps[m]
            rhs = _conv(H, src.ops, m, E) + _conv(tgt.ops, H, m, E)
            out[m] = (lhs - rhs).nonzero_mod(E)
        return out

    def is_valid(self) -> bool:
        return not any(self.residuals().values())


# linear solver for A x + s x B = R over Lambda_0 / T^E ---------------------


@dataclass
class _OperatorEquation:
    """The map x -> A x + s x B on n x m matrices, on a common exponent grid."""

    A: Matrix
    B: Matrix
    sign: int
    N: int
    K: int

    @property
    def shape(self):
        return self.A.rows, self.B.cols

    def apply(self, X: Matrix, E) -> Matrix:
        out = self.A.matmul(X, E)
        xb = X.matmul(self.B, E)
        return out + xb if self.sign > 0 else out - xb

    def lattice_matrix(self, L: Lattice):
        """Matrix of the map on vec(x), index i*m + j."""
        n, m = self.shape
        a = to_grid(self.A, self.N, self.K)
        b = to_grid(self.B, self.N, self.K)
        M = [[{} for _ in range(n * m)] for _ in range(n * m)]
        for i in range(n):
            for j in range(m):
                r = i * m + j
                for k in range(n):
                    if a[i][k]:
                        M[r][k * m + j] = L.add(M[r][k * m + j], a[i][k])
                for k in range(m):
                    if b[k][j]:
                        term = b[k][j] if self.sign > 0 else L.neg(b[k][j])
                        M[r][i * m + k] = L.add(M[r][i * m + k], term)
        return M


def _grid_for(mats, E):
    E = as_fraction(E)
    N = grid_of(mats, E)
    return N, int(E * N)


def _slices(M, K: int, p: int) -> np.ndarray:
    size_r, size_c = len(M), len(M[0]) if M else 0
    out = np.zeros((K, size_r, size_c), dtype=np.int64)
    for i, row in enumerate(M):
        for j, poly in enumerate(row):
            for e, c in poly.items():
                out[e, i, j] = c
    return out


def solve_operator_equation(eq: _OperatorEquation, R: Matrix, E, p: int):
    """Solve A x + s x B = R; returns (x, None) or (None, certificate).

    First tries the degreewise F_p solve (lowest-index pivoting at each
    T-level); if that fails, decides solvability exactly with a Smith form
    over the truncated lattice ring and returns a certificate on failure.
    """
    n, m = eq.shape
    L = Lattice(p, eq.K)
    Mlat = eq.lattice_matrix(L)
    rhs_grid = to_grid(R, eq.N, eq.K)
    rhs = [rhs_grid[i][j] for i in range(n) for j in range(m)]
    x = _degreewise(Mlat, rhs, eq.K, p)
    if x is None:
        x, cert = _smith_solve(L, Mlat, rhs)
        if x is None:
            phi = [[cert[i * m + j] for j in range(m)] for i in range(n)]
            return None, from_grid(phi, p, eq.N, n, m)
    X = [[x[i * m + j] for j in range(m)] for i in range(n)]
    return from_grid(X, p, eq.N, n, m), None


def _degreewise(Mlat, rhs, K: int, p: int):
    size = len(rhs)
    slices = _slices(Mlat, K, p)
    nz = [e for e in range(K) if slices[e].any()]
    r = np.zeros((K, size), dtype=np.int64)
    for idx, poly in enumerate(rhs):
        for e, c in poly.items():
            r[e, idx] = c
    xs = np.zeros((K, size), dtype=np.int64)
    L0 = slices[0]
    for e in range(K):
        b = r[e].copy()
        for a in nz:
            if a == 0 or a > e:
                continue
            b = (b - slices[a] @ xs[e - a]) % p
        if not b.any():
            continue
        sol, _ = fp.solve(L0, b, p)
        if sol is None:
            return None
        xs[e] = sol % p
    out = []
    for idx in range(size):
        out.append({e: int(xs[e, idx]) for e in range(K) if xs[e, idx]})
    return out


def _smith_solve(L: Lattice, Mlat, rhs):
    size = len(rhs)
    res = snf(L, Mlat, track_rows=True, track_cols=True)
    P, Q = res.P, res.Q
    r = [{} for _ in range(size)]
    for i in range(size):
        acc = {}
        for j in range(size):
            if P[i][j] and rhs[j]:
                acc = L.add(acc, L.mul(P[i][j], rhs[j]))
        r[i] = acc
    pivot_rows = {row: (col, v) for row, col, v in res.pivots}
    y = [{} for _ in range(size)]
    for i in range(size):
        ri = r[i]
        if i not in pivot_rows:
            if ri:
                return None, P[i]
            continue
        col, v = pivot_rows[i]
        if not ri:
            continue
        if min(ri) < v:
            return None, L.shift(P[i], L.K - v)
        y[col] = L.div(ri, res.reduced[i][col])
    x = [{} for _ in range(size)]
    for i in range(size):
        acc = {}
        for j in range(size):
            if Q[i][j] and y[j]:
                acc = L.add(acc, L.mul(Q[i][j], y[j]))
        x[i] = acc
    return x, None


def _pair(phi: Matrix, X: Matrix, E) -> NovikovScalar:
    acc = NovikovScalar.zero(phi.p)
    for key, v in phi.data.items():
        w = X.data.get(key)
        if w is not None:
            acc = acc + v * w
    return acc.truncate(E)


def _certificate_holds(phi: Matrix, eq: _OperatorEquation, rhs: Matrix, E) -> bool:
    """phi kills the image of the operator (checked on matrix units) but not rhs."""
    E = as_fraction(E)
    n, m = eq.shape
    one = NovikovScalar.one(phi.p)
    for i in range(n):
        for j in range(m):
            unit = Matrix(phi.p, n, m, {(i, j): one})
            if not _is_zero_mod(_pair(phi, eq.apply(unit, E), E), E):
                return False
    return not _is_zero_mod(_pair(phi, rhs, E), E)


def _is_zero_mod(a: NovikovScalar, E) -> bool:
    return all(e >= E for e, _ in a.terms)


# promotion -----------------------------------------------------------------


def obstruction(X: XkModule) -> Matrix:
    """o = sum_{i+j=k+1, 1 <= i, j <= k} d_i d_j."""
    return _conv(X.ops, X.ops, X.k + 1, X.precision, lo=1)


def promote_step(X: XkModule, adjustable: bool = False) -> XkModule:
    """Extend X by d_{k+1} solving d_0 x + x d_0 = -o.

    With ``adjustable`` the top operator d_k (k >= 2) is one the caller may
    change: if the plain equation has no solution, d_k + c and d_{k+1} are
    solved for jointly, where c is a d_0-cycle so that the relation at order
    k still holds.  The obstruction is linear in c for k >= 2.
    """
    E, p = X.precision, X.p
    if not validate_xk(X).ok:
        raise NovikovError("input is not a valid X_k-module")
    o = obstruction(X)
    d0 = X.ops[0]
    if not (d0.matmul(o, E) - o.matmul(d0, E)).is_zero_mod(E):
        raise ObstructionNotCycle("obstruction does not commute with d_0")
    zero = Matrix(p, X.n, X.n)
    if o.is_zero_mod(E):
        return XkModule(p, E, list(X.generators), list(X.ops) + [zero])
    N, K = _grid_for(X.ops + [o], E)
    eq = _OperatorEquation(d0, d0, +1, N, K)
    x, cert = solve_operator_equation(eq, -o, E, p)
    if x is not None:
        return XkModule(p, E, list(X.generators), list(X.ops) + [x])
    if adjustable and X.k >= 2:
        joint = _joint_step(X, o, N, K)
        if joint is not None:
            c, x = joint
            ops = list(X.ops[:-1]) + [X.ops[-1] + c, x]
            return XkModule(p, E, list(X.generators), ops)
    raise ObstructionNonexact(X.k + 1, cert, -o, eq)


def _joint_step(X: XkModule, o: Matrix, N: int, K: int):
    """Solve L c = 0 and L x + (d_1 c + c d_1) = -o for the pair (c, x)."""
    p, n, E = X.p, X.n, X.precision
    lat = Lattice(p, K)
    L = _OperatorEquation(X.ops[0], X.ops[0], +1, N, K).lattice_matrix(lat)
    M1 = _OperatorEquation(X.ops[1], X.ops[1], +1, N, K).lattice_matrix(lat)
    s = n * n
    big = [[{} for _ in range(2 * s)] for _ in range(2 * s)]
    for i in range(s):
        for j in range(s):
            big[i][j] = L[i][j]
            big[s + i][j] = M1[i][j]
            big[s + i][s + j] = L[i][j]
    og = to_grid(-o, N, K)
    rhs = [{} for _ in range(s)] + [og[i][j] for i in range(n) for j in range(n)]
    sol = _degreewise(big, rhs, K, p)
    if sol is None:
        sol, _ = _smith_solve(lat, big, rhs)
        if sol is None:
            return None
    c = from_grid([[sol[i * n + j] for j in range(n)] for i in range(n)], p, N, n, n)
    x = from_grid([[sol[s + i * n + j] for j in range(n)] for i in range(n)], p, N, n, n)
    return c, x


def promote(X: XkModule, target_order: int) -> XkModule:
    """Iterate :func:`promote_step`; only operators above the input order are adjusted."""
    k_in = X.k
    while X.k < target_order:
        X = promote_step(X, adjustable=X.k > k_in)
    return X


def promote_morphism_step(f: XkMorphism, source: XkModule, target: XkModule) -> XkMorphism:
    """Extend f to order k+1 between modules already of order k+1."""
    k = f.k
    E = min(source.precision, target.precision)
    p = source.p
    d, delta = source.ops, target.ops
    r = Matrix(p, target.n, source.n)
    for i in range(1, k + 2):
        r = r + delta[i].matmul(f.maps[k + 1 - i], E) - f.maps[k + 1 - i].matmul(d[i], E)
    N, K = _grid_for([delta[0], d[0], r], E)
    eq = _OperatorEquation(delta[0], d[0], -1, N, K)
    x, cert = solve_operator_equation(eq, -r, E, p)
    if x is None:
        raise ObstructionNonexact(k + 1, cert, -r, eq)
    return XkMorphism(source, target, list(f.maps) + [x])


def find_homotopy(f: XkMorphism, g: XkMorphism) -> XkHomotopy:
    """Solve f_m - g_m = sum H_i d_j + sum delta_i H_j order by order."""
    src, tgt = f.source, f.target
    E = min(src.precision, tgt.precision)
    p = src.p
    H: List[Matrix] = []
    for m in range(f.k + 1):
        r = f.maps[m] - g.maps[m]
        for i in range(m):
            r = r - H[i].matmul(src.ops[m - i], E) - tgt.ops[m - i].matmul(H[i], E)
        N, K = _grid_for([tgt.ops[0], src.ops[0], r], E)
        eq = _OperatorEquation(tgt.ops[0], src.ops[0], +1, N, K)
        x, cert = solve_operator_equation(eq, r, E, p)
        if x is None:
            raise ObstructionNonexact(m, cert, r, eq)
        H.append(x)
    return XkHomotopy(f, g, H)


# u-differential ------------------------------------------------------------


@dataclass
class UDifferential:
    """d = d_0 + d_1 u + ... + d_{U-1} u^{U-1}, truncated at u^U."""

    coefficients: List[Matrix]
    precision: Fraction

    @property
    def U(self) -> int:
        return len(self.coefficients)

    def square(self) -> List[Matrix]:
        A, E = self.coefficients, self.precision
        return [_conv(A, A, m, E) for m in range(self.U)]

    def squares_to_zero(self) -> bool:
        return all(s.is_zero_mod(self.precision) for s in self.square())

    def folded(self) -> Matrix:
        out = Matrix(self.coefficients[0].p, self.coefficients[0].rows, self.coefficients[0].cols)
        for a in self.coefficients:
            out = out + a
        return out


def assemble_u_differential(X: XkModule, U: int) -> UDifferential:
    if X.k < U - 1:
        raise OrderMismatch(f"order {X.k} is too small for u-truncation {U}")
    return UDifferential(list(X.ops[:U]), X.precision)


# instances -----------------------------------------------------------------


def xk_from_equivariant(Eq, k: Optional[int] = None) -> XkModule:
    """The u-expansion of an equivariant complex, truncated at order k."""
    ops = list(Eq.A if k is None else Eq.A[: k + 1])
    base = Eq.base
    gens = [Generator(g.id + "@1", g.action, g.degree) for g in base.generators] + [
        Generator(g.id + "@th", g.action, (g.degree + 1) % 2) for g in base.generators
    ]
    while len(ops) < (k or 0) + 1:
        ops.append(Matrix(base.p, 2 * base.n, 2 * base.n))
    return XkModule(base.p, base.precision, gens, ops)


def gauged_tate_module(C: FilteredComplex, p: int, U: int, seed, steps: int = 6) -> XkModule:
    """u-expansion of the Tate complex of C^(x)p after a seeded polynomial gauge.

    It satisfies every relation exactly, and generically has non-zero
    coefficients beyond u^1, so truncations are non-trivial X_k-modules.
    """
    from .equivariant import families_from_expansion, gauge_conjugate, tate_equivariant, assemble_equivariant

    Eq = tate_equivariant(C, p, U)
    A = gauge_conjugate(Eq.A, Eq.base, U, seed, steps)
    Eq2 = assemble_equivariant(Eq.base, families_from_expansion(A, Eq.base.n), U)
    return xk_from_equivariant(Eq2)


def engineered_obstruction(max_generators: int = 3) -> XkModule:
    """First order-1 module over F_2 (brute-force search) that does not promote.

    Candidates are constant matrices d_0, d_1 on up to ``max_generators``
    generators, enumerated in a fixed order.
    """
    p = 2
    for n in range(1, max_generators + 1):
        gens = [Generator(f"g{i}") for i in range(n)]
        mats = list(itertools.product(range(2), repeat=n * n))
        for a in mats:
            A = np.array(a, dtype=np.int64).reshape(n, n)
            if ((A @ A) % 2).any():
                continue
            for b in mats:
                B = np.array(b, dtype=np.int64).reshape(n, n)
                if ((A @ B + B @ A) % 2).any():
                    continue
                X = XkModule(p, Fraction(4), gens, [Matrix.from_ints(p, A.tolist()), Matrix.from_ints(p, B.tolist())])
                try:
                    promote_step(X)
                except ObstructionNonexact:
                    return X
    raise RuntimeError("no obstructed instance in the search range")
