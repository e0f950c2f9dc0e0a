"""Filtered chain complexes over the Novikov ring and their barcodes.

A complex has action-labelled generators and a differential matrix whose
entry ``d[y][x]`` is the y-coefficient of ``d(x)``.  The level of a chain is
``min(valuation(coefficient) + action(generator))``.  The precision ``E`` is
measured in level units: entry ``d[y][x]`` is known modulo
``T^(E + action(x) - action(y))``, which after normalization means every
normalized entry is known modulo ``T^E``.
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

from . import fp
from ._lattice import (
    Lattice,
    grid_denominator,
    mat_vec,
    poly_to_scalar,
    require_grid,
    scalar_to_poly,
    snf,
)
from .core import NovikovError, NovikovScalar, PrecisionExhausted, as_fraction, is_prime
from .matrix import Matrix

INF = math.inf


class NoTorsion(NovikovError):
    pass


class InfeasiblePlant(NovikovError):
    pass


@dataclass(frozen=True)
class Generator:
    id: str
    action: Fraction = Fraction(0)
    degree: int = 0


@dataclass(frozen=True)
class AtLeastE:
    """A bar length known only to be at least the working precision."""

    precision: Fraction

    def __repr__(self):
        return f"AtLeastE({self.precision})"


@dataclass(frozen=True)
class Bar:
    birth: Optional[Fraction]
    length: Union[Fraction, AtLeastE]


@dataclass
class Barcode:
    free_rank: int
    bars: List[Bar] = field(default_factory=list)

    def lengths(self) -> List[Fraction]:
        return sorted(b.length for b in self.bars if not isinstance(b.length, AtLeastE))

    def torsion(self) -> List[Fraction]:
        return self.lengths()


@dataclass
class ValidationReport:
    violations: List[dict] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.ok


class ChainVector:
    """Finitely supported map from generator ids to scalars."""

    def __init__(self, coefficients: Mapping[str, NovikovScalar]):
        self.coefficients = {k: v for k, v in coefficients.items() if not v.is_zero()}

    def is_zero(self) -> bool:
        return not self.coefficients

    def __repr__(self):
        return f"ChainVector({self.coefficients})"


class FilteredComplex:
    def __init__(
        self,
        p: int,
        precision,
        generators: Sequence[Generator],
        entries: Mapping[Tuple[str, str], NovikovScalar],
        graded: bool = False,
    ):
        """``entries`` maps ``(to_id, from_id)`` to the coefficient of ``to`` in ``d(from)``."""
        if not is_prime(p):
            raise ValueError(f"modulus {p} is not prime")
        self.p = p
        self.precision = as_fraction(precision)
        if self.precision <= 0:
            raise ValueError("precision must be positive")
        self.generators: Tuple[Generator, ...] = tuple(generators)
        self.graded = graded
        self._index = {g.id: i for i, g in enumerate(self.generators)}
        if len(self._index) != len(self.generators):
            raise ValueError("duplicate generator ids")
        data = {}
        for (y, x), v in entries.items():
            i, j = self._index[y], self._index[x]
            if v.p != p:
                raise ValueError("entry modulus mismatch")
            shift = self.generators[i].action - self.generators[j].action
            bound = self.precision - shift
            v = NovikovScalar(p, [t for t in v.terms if t[0] < bound])
            if not v.is_zero():
                data[(i, j)] = v
        self.d = Matrix(p, len(self.generators), len(self.generators))
        self.d.data = data

    # construction helpers ---------------------------------------------
    @classmethod
    def from_normalized(cls, p, precision, generators, D: Matrix, graded=False):
        """Build from a normalized matrix (index-keyed) and arbitrary actions."""
        gens = list(generators)
        entries = {}
        for (i, j), v in D.data.items():
            entries[(gens[i].id, gens[j].id)] = v.shift(gens[j].action - gens[i].action)
        return cls(p, precision, gens, entries, graded)

    @property
    def n(self) -> int:
        return len(self.generators)

    def index(self, gid: str) -> int:
        return self._index[gid]

    def action(self, i: int) -> Fraction:
        return self.generators[i].action

    def entry(self, y: str, x: str) -> NovikovScalar:
        return self.d[(self._index[y], self._index[x])]

    def normalized_matrix(self) -> Matrix:
        m = Matrix(self.p, self.n, self.n)
        gens = self.generators
        m.data = {(i, j): v.shift(gens[i].action - gens[j].action) for (i, j), v in self.d.data.items()}
        return m

    def is_strict(self) -> bool:
        D = self.normalized_matrix()
        return all(v.valuation() > 0 for v in D.data.values())

    def with_precision(self, E) -> "FilteredComplex":
        entries = {(self.generators[i].id, self.generators[j].id): v for (i, j), v in self.d.data.items()}
        return FilteredComplex(self.p, E, self.generators, entries, self.graded)

    def __repr__(self):
        return f"FilteredComplex(F_{self.p}, n={self.n}, E={self.precision})"


# validation and normalization ------------------------------------------


def validate(C: FilteredComplex) -> ValidationReport:
    rep = ValidationReport()
    gens = C.generators
    for (i, j), v in sorted(C.d.data.items()):
        lvl = v.valuation() + gens[i].action - gens[j].action
        if lvl < 0:
            rep.violations.append(
                {"kind": "filtration", "to": gens[i].id, "from": gens[j].id, "level_change": lvl}
            )
        if C.graded and gens[i].degree != 1 - gens[j].degree:
            rep.violations.append({"kind": "degree", "to": gens[i].id, "from": gens[j].id})
    D = C.normalized_matrix()
    sq = D.matmul(D)
    for (i, j), v in sorted(sq.nonzero_mod(C.precision).items()):
        rep.violations.append(
            {"kind": "d_squared", "to": gens[i].id, "from": gens[j].id, "value": v}
        )
    return rep


def normalize(C: FilteredComplex) -> FilteredComplex:
    """Conjugate by the diagonal rescaling that moves every action to zero."""
    gens = [Generator(g.id, Fraction(0), g.degree) for g in C.generators]
    return FilteredComplex.from_normalized(C.p, C.precision, gens, C.normalized_matrix(), C.graded)


# lattice plumbing -------------------------------------------------------


def _exponents(M: Matrix) -> List[Fraction]:
    return [e for v in M.data.values() for e, _ in v.terms]


def lattice_of(M: Matrix, E: Fraction, extra: Iterable[Fraction] = ()) -> Tuple[Lattice, int]:
    N = grid_denominator(_exponents(M) + [E] + list(extra))
    K = require_grid(E, N)
    return Lattice(M.p, K), N


def to_polys(M: Matrix, N: int, K: int):
    A = [[{} for _ in range(M.cols)] for _ in range(M.rows)]
    for (i, j), v in M.data.items():
        A[i][j] = scalar_to_poly(v, N, K)
    return A


def _snf_of(M: Matrix, E: Fraction, track_rows=False, track_cols=False, extra=()):
    L, N = lattice_of(M, E, extra)
    res = snf(L, to_polys(M, N, L.K), track_rows, track_cols)
    return res, L, N


# barcode and spectral numbers -------------------------------------------


def barcode(C: FilteredComplex, acyclic: bool = False) -> Barcode:
    """Torsion exponents and free rank of the homology over Lambda_0.

    Bars are the positive pivot valuations of a minimal-valuation Smith form
    of the normalized differential; valuation-zero pivots are cancelling
    pairs.  Births are the actions of the pivot-row generators.

    A bar of length >= E looks like two free summands modulo T^E, so the
    free rank is an apparent one.  With ``acyclic`` the caller declares that
    homology over Lambda vanishes; the apparent free summands are then
    reported as bars of length AtLeastE(E) with undetermined birth.
    """
    D = C.normalized_matrix()
    if C.n == 0:
        return Barcode(0, [])
    res, L, N = _snf_of(D, C.precision)
    bars = [
        Bar(C.generators[r].action, Fraction(v, N)) for r, _, v in res.pivots if v > 0
    ]
    bars.sort(key=lambda b: (b.length, b.birth))
    free = C.n - 2 * len(res.pivots)
    if acyclic:
        if free % 2:
            raise ValueError("an odd number of free summands cannot come from long bars")
        bars += [Bar(None, AtLeastE(C.precision)) for _ in range(free // 2)]
        free = 0
    return Barcode(free, bars)


def _as_vector(z: Union[ChainVector, Mapping], C: FilteredComplex) -> Dict[int, NovikovScalar]:
    coeffs = z.coefficients if isinstance(z, ChainVector) else z
    return {C.index(k): v for k, v in coeffs.items() if not v.is_zero()}


def sigma(z, C: FilteredComplex):
    """Level of a chain: min over the support of valuation + action."""
    vec = _as_vector(z, C)
    if not vec:
        return INF
    return min(v.valuation() + C.action(i) for i, v in vec.items())


def apply_differential(C: FilteredComplex, z) -> ChainVector:
    vec = _as_vector(z, C)
    out = C.d.apply(vec)
    return ChainVector({C.generators[i].id: v for i, v in out.items()})


def tau_drop(z, C: FilteredComplex):
    """Level raise ``sigma(dz) - sigma(z)``; +inf when ``dz`` vanishes."""
    vec = _as_vector(z, C)
    if not vec:
        return INF
    s = min(v.valuation() + C.action(i) for i, v in vec.items())
    # only the leading level of dz matters: compute dz below s + w, doubling w;
    # terms at level >= s + E are not determined by the stored entries
    w = Fraction(1)
    while True:
        w = min(w, C.precision)
        sd = _lowest_level_below(C, vec, s + w)
        if sd is not None:
            return sd - s
        if w == C.precision:
            return INF
        w *= 2


def _lowest_level_below(C: FilteredComplex, vec: Dict[int, NovikovScalar], bound: Fraction):
    out: Dict[int, NovikovScalar] = {}
    for (i, j), a in C.d.data.items():
        x = vec.get(j)
        if x is None:
            continue
        cap = bound - C.action(i)
        va, vx = a.valuation(), x.valuation()
        if va + vx >= cap:
            continue
        w = a.truncate(cap - vx) * x.truncate(cap - va)
        out[i] = out[i] + w if i in out else w
    levels = [v.truncate(bound - C.action(i)).valuation() for i, v in out.items()]
    levels = [lv + C.action(i) for lv, i in zip(levels, out) if lv is not None]
    return min(levels) if levels else None


def boundary_depth(C: FilteredComplex) -> Tuple[Fraction, ChainVector]:
    """Smallest bar together with a chain whose level raise equals it."""
    D = C.normalized_matrix()
    res, L, N = _snf_of(D, C.precision, track_cols=True)
    for r, c, v in res.pivots:
        if v > 0:
            coeffs = {}
            for k in range(C.n):
                q = res.Q[k][c]
                if q:
                    coeffs[C.generators[k].id] = poly_to_scalar(q, C.p, N).shift(-C.action(k))
            return Fraction(v, N), ChainVector(coeffs)
    raise NoTorsion("complex has no torsion bars below the precision")


def image_rank_under_shift(C: FilteredComplex, q) -> int:
    """Minimal number of generators of the image of H(T^q C) -> H(C)."""
    q = as_fraction(q)
    bc = barcode(C)
    return bc.free_rank + sum(1 for b in bc.lengths() if b > q)


# action windows ---------------------------------------------------------


@dataclass
class WindowHomology:
    dimension: int
    basis: List[ChainVector]
    interval_check: Optional[int]

    @property
    def consistent(self) -> bool:
        return self.interval_check is None or self.interval_check == self.dimension


class _Window:
    """Free resolution of the quotient complex of chains with level in [c, d).

    With Lambda_0 coefficients, generator x contributes the summand
    T^s Lambda_0 / T^t Lambda_0 in normalized coordinates, where
    s = max(a(x), c) and t = max(a(x), d).  The quotient complex is replaced
    by the cone of the inclusion of the level->=d part into the level->=c
    part, a complex of free modules with the same homology.

    A cone entry is a normalized entry multiplied by T^(s_j - s_i), so it is
    known only modulo T^(E - spread) where spread is the largest such
    negative shift; the normal form runs at that effective precision.
    """

    def __init__(self, C: FilteredComplex, c: Fraction, d: Fraction, grid: Iterable[Fraction] = (), precision=None):
        self.C = C
        self.c, self.d = c, d
        n = C.n
        for (i, j), v in C.d.data.items():
            if v.valuation() < 0:
                raise ValueError(
                    "window homology needs Lambda_0 coefficients; "
                    f"entry ({C.generators[i].id}, {C.generators[j].id}) has negative valuation"
                )
        self.s = [max(C.action(i), c) for i in range(n)]
        self.t = [max(C.action(i), d) for i in range(n)]
        E = window_precision(C, c, d) if precision is None else precision
        self.precision = E
        w = [self.t[i] - self.s[i] for i in range(n)]
        if w and max(w) >= E:
            raise PrecisionExhausted("window is wider than the precision left after level shifts")
        D = C.normalized_matrix()
        cone = Matrix(C.p, 2 * n, 2 * n)
        for (i, j), v in D.data.items():
            cone.data[(i, j)] = v.shift(self.s[j] - self.s[i])
            cone.data[(n + i, n + j)] = -v.shift(self.t[j] - self.t[i])
        for i in range(n):
            cone.data[(i, n + i)] = NovikovScalar.monomial(1, w[i], C.p)
        self.cone = cone.truncate(E)
        extra = list(grid) + [c, d] + [C.action(i) for i in range(n)]
        self.L, self.N = lattice_of(self.cone, E, extra)
        self.res = snf(self.L, to_polys(self.cone, self.N, self.L.K), True, True)
        pivot_cols = {col for _, col, _ in self.res.pivots}
        self.kernel_cols = [j for j in range(2 * n) if j not in pivot_cols]
        free = 2 * n - 2 * len(self.res.pivots)
        if free:
            raise PrecisionExhausted("window homology has an undetermined summand")

    def positive_pivots(self):
        return [(r, c, v) for r, c, v in self.res.pivots if v > 0]

    def kernel_coords(self, vec) -> List[int]:
        """Residues mod t of the kernel-basis coordinates of a cycle."""
        Qinv = self.res.Qinv
        out = []
        for j in self.kernel_cols:
            acc = {}
            for k, x in enumerate(vec):
                if x and Qinv[j][k]:
                    acc = self.L.add(acc, self.L.mul(Qinv[j][k], x))
            out.append(acc.get(0, 0))
        return out

    def boundary_residues(self):
        """Kernel coordinates (mod t) of the boundary generators."""
        cols = []
        n2 = 2 * self.C.n
        for r, c, v in self.res.pivots:
            if v:
                continue
            col = [self.res.Pinv[k][r] for k in range(n2)]
            col = [self.L.shift(x, v) for x in col]
            cols.append(self.kernel_coords(col))
        return cols

    def kernel_basis(self):
        n2 = 2 * self.C.n
        return [[self.res.Q[k][j] for k in range(n2)] for j in self.kernel_cols]


def _quotient_basis(p, B_cols: List[List[int]], dim: int) -> List[int]:
    """Standard-basis indices completing span(B) to the whole space."""
    if dim == 0:
        return []
    base = [list(col) for col in B_cols]
    chosen = []
    r0 = fp.rank([list(r) for r in zip(*base)], p) if base else 0
    cur = r0
    for i in range(dim):
        e = [1 if k == i else 0 for k in range(dim)]
        trial = base + [e]
        r = fp.rank([list(r) for r in zip(*trial)], p)
        if r > cur:
            base.append(e)
            chosen.append(i)
            cur = r
    return chosen


def window_precision(C: FilteredComplex, c, d) -> Fraction:
    """Precision at which the window [c, d) is determined by the stored entries."""
    if C.n == 0:
        return C.precision
    s = [max(g.action, c) for g in C.generators]
    t = [max(g.action, d) for g in C.generators]
    return C.precision - max(max(s) - min(s), max(t) - min(t))


def _check_window(c, d):
    c, d = as_fraction(c), as_fraction(d)
    if c >= d:
        raise ValueError("window needs c < d")
    return c, d


def window_homology(C: FilteredComplex, c, d) -> WindowHomology:
    c, d = _check_window(c, d)
    n = C.n
    if n == 0:
        return WindowHomology(0, [], 0)
    W = _Window(C, c, d)
    pos = W.positive_pivots()
    basis = []
    for r, _, _ in pos:
        coeffs = {}
        for k in range(n):
            x = W.res.Pinv[k][r]
            if x:
                gid = C.generators[k].id
                coeffs[gid] = poly_to_scalar(x, C.p, W.N).shift(W.s[k] - C.action(k))
        basis.append(ChainVector(coeffs))
    return WindowHomology(len(pos), basis, _interval_count(C, c, d))


def _interval_count(C: FilteredComplex, c: Fraction, d: Fraction) -> Optional[int]:
    """Bar-counting prediction, available when all generators share one action."""
    acts = {g.action for g in C.generators}
    if len(acts) != 1:
        return None
    a = acts.pop()
    w = max(a, d) - max(a, c)
    if w <= 0:
        return 0
    bc = barcode(C)
    return bc.free_rank + 2 * len(bc.bars)


def persistence_map(C: FilteredComplex, from_window, to_window):
    """Rank and matrix over F_p of the map induced by the window inclusion.

    The map is reduced modulo the maximal ideal, so its rank counts the
    generators of the source window homology that survive in the target.
    Returns ``(rank, matrix)`` with matrix rows indexed by a basis of the
    target and columns by a basis of the source.
    """
    c, d = _check_window(*from_window)
    c2, d2 = _check_window(*to_window)
    if not (c2 <= c and d2 <= d):
        raise ValueError("persistence map needs c' <= c and d' <= d")
    n = C.n
    if n == 0:
        return 0, []
    grid = [c, d, c2, d2]
    E = min(window_precision(C, c, d), window_precision(C, c2, d2))
    W1 = _Window(C, c, d, grid, E)
    W2 = _Window(C, c2, d2, grid, E)
    if W1.N != W2.N:
        raise RuntimeError("window lattices disagree")
    L, p = W2.L, C.p
    B1 = W1.boundary_residues()
    B2 = W2.boundary_residues()
    k1, k2 = len(W1.kernel_cols), len(W2.kernel_cols)
    src = _quotient_basis(p, B1, k1)
    tgt = _quotient_basis(p, B2, k2)
    N = W1.N
    shifts = [int((W1.s[i] - W2.s[i]) * N) for i in range(n)] + [
        int((W1.t[i] - W2.t[i]) * N) for i in range(n)
    ]
    kb = W1.kernel_basis()
    images = []
    for idx in src:
        vec = [L.shift(x, shifts[k]) for k, x in enumerate(kb[idx])]
        images.append(W2.kernel_coords(vec))
    # coordinates of each image in the target quotient basis
    matrix = []
    cols_tgt = [[1 if k == i else 0 for k in range(k2)] for i in tgt]
    system = B2 + cols_tgt
    for img in images:
        if not system:
            matrix.append([])
            continue
        Mt = [list(r) for r in zip(*system)]
        x, _ = fp.solve(Mt, img, p)
        matrix.append([int(v) for v in x[len(B2):]])
    mat = [list(r) for r in zip(*matrix)] if matrix and tgt else [[] for _ in tgt]
    if not src or not tgt:
        return 0, mat
    return fp.rank(mat, p), mat


def nonvanishing_transfer(rank_iota: int) -> int:
    """Lower bound for the dimension of any space the map factors through."""
    if rank_iota < 0:
        raise ValueError("rank must be non-negative")
    return rank_iota


# random instances -------------------------------------------------------


def random_complex(
    seed,
    n: int,
    exponent_pool: Sequence,
    planted_barcode: Optional[Sequence] = None,
    *,
    p: int = 2,
    precision=32,
    graded: bool = False,
    cancelling_pairs: int = 0,
    action_pool: Optional[Sequence] = None,
    mixing_steps: Optional[int] = None,
) -> FilteredComplex:
    """Deterministic random complex.

    With ``planted_barcode`` the normal form ``x_i -> T^{b_i} y_i`` (plus
    ``cancelling_pairs`` pairs with a unit coefficient and free generators)
    is conjugated by a random invertible change of basis over Lambda_0, so
    the barcode is known in advance.  Without it, bar lengths are drawn from
    ``exponent_pool``.  Actions are zero unless ``action_pool`` is given.
    """
    rng = random.Random(seed)
    pool = [as_fraction(e) for e in exponent_pool]
    E = as_fraction(precision)
    if planted_barcode is None:
        max_pairs = n // 2
        k = rng.randint(0, max_pairs)
        bars = [rng.choice(pool) for _ in range(k)] if pool else []
        bars = [b for b in bars if b > 0]
    else:
        bars = [as_fraction(b) for b in planted_barcode]
    if any(b <= 0 for b in bars):
        raise InfeasiblePlant("bar lengths must be positive")
    if 2 * (len(bars) + cancelling_pairs) > n:
        raise InfeasiblePlant(f"{len(bars)} bars and {cancelling_pairs} cancelling pairs need more than {n} generators")
    lengths = list(bars) + [Fraction(0)] * cancelling_pairs
    degrees = []
    D0 = {}
    for k, b in enumerate(lengths):
        x, y = 2 * k, 2 * k + 1
        D0[(y, x)] = rng.randrange(1, p)
        degrees += [1, 0]
    free = n - 2 * len(lengths)
    degrees += [rng.randint(0, 1) for _ in range(free)]
    exps = {key: lengths[key[1] // 2] for key in D0}
    # permutation of the basis
    perm = list(range(n))
    rng.shuffle(perm)
    M = Matrix(p, n, n)
    for (y, x), c in D0.items():
        M.data[(perm[y], perm[x])] = NovikovScalar.monomial(c, exps[(y, x)], p)
    deg = [0] * n
    for i in range(n):
        deg[perm[i]] = degrees[i]
    if not graded:
        deg = [0] * n
    steps = mixing_steps if mixing_steps is not None else 2 * n
    mix_pool = [Fraction(0)] + [e for e in pool if e >= 0]
    for _ in range(steps):
        if n < 2:
            break
        i, j = rng.sample(range(n), 2)
        if graded and deg[i] != deg[j]:
            continue
        e = rng.choice(mix_pool)
        c = rng.randrange(1, p)
        A = Matrix.identity(p, n)
        A.data[(i, j)] = NovikovScalar.monomial(c, e, p)
        Ainv = Matrix.identity(p, n)
        Ainv.data[(i, j)] = NovikovScalar.monomial(-c, e, p)
        M = A.matmul(M, E).matmul(Ainv, E)
    # unit rescaling
    if p > 2:
        for i in range(n):
            u = rng.randrange(1, p)
            uinv = pow(u, -1, p)
            new = {}
            for (a, b), v in M.data.items():
                new[(a, b)] = v * ((u if a == i else 1) * (uinv if b == i else 1))
            M.data = {k: v for k, v in new.items() if not v.is_zero()}
    apool = [as_fraction(a) for a in action_pool] if action_pool else [Fraction(0)]
    gens = [Generator(f"g{i}", rng.choice(apool), deg[i]) for i in range(n)]
    return FilteredComplex.from_normalized(p, E, gens, M.truncate(E), graded)
