"""Strong deformation retracts, the basic perturbation lemma, strictification.

All maps are stored in normalized coordinates (every generator rescaled to
action zero), so "filtration preserving" means "entries in Lambda_0" and
"raises the level by at least eps" means "entries have valuation >= eps".
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import fp
from .complex import FilteredComplex, Generator, ValidationReport, normalize, validate
from .core import NovikovError, NovikovScalar, as_fraction
from . import _lattice as lat
from ._lattice import Lattice
from .matrix import Matrix, from_grid, grid_of, to_grid


class BlockLeak(NovikovError):
    """The level-preserving part of the differential connects two blocks."""


class InvalidSplit(NovikovError):
    pass


class DivergentSeries(NovikovError):
    pass


@dataclass
class SDRData:
    """Retract data ``F: M -> N``, ``G: N -> M``, homotopy ``H`` on M."""

    M: FilteredComplex
    N: FilteredComplex
    F: Matrix
    G: Matrix
    H: Matrix

    @property
    def p(self):
        return self.M.p

    @property
    def precision(self):
        return min(self.M.precision, self.N.precision)


@dataclass
class Perturbation:
    D: Matrix
    gap: Optional[Fraction]

    @classmethod
    def of(cls, D: Matrix) -> "Perturbation":
        return cls(D, D.min_valuation())


def level_raise(D: Matrix) -> Optional[Fraction]:
    """Minimal valuation of the entries; None for the zero matrix."""
    return D.min_valuation()


def identity_sdr(C: FilteredComplex) -> SDRData:
    I = Matrix.identity(C.p, C.n)
    return SDRData(C, C, I, I, Matrix.zero(C.p, C.n, C.n))


def _grid(S: SDRData, extra=()):
    E = S.precision
    mats = [S.M.normalized_matrix(), S.N.normalized_matrix(), S.F, S.G, S.H] + list(extra)
    N = grid_of(mats, E)
    L = Lattice(S.p, int(E * N))
    return L, N, [to_grid(m, N, L.K) for m in mats]


def validate_sdr(S: SDRData) -> ValidationReport:
    """Residuals of the five retract identities modulo T^E (plus the chain-map checks)."""
    rep = ValidationReport()
    for name, X in (("F", S.F), ("G", S.G), ("H", S.H)):
        v = X.min_valuation()
        if v is not None and v < 0:
            rep.violations.append({"kind": f"{name} not filtration preserving", "valuation": v})
    if rep.violations:
        return rep
    L, N, mats = _grid(S)
    alg = _Alg(L)
    dM, dN, F, G, H = (alg.load(m) for m in mats)
    nM, nN = S.M.n, S.N.n
    mm = alg.mm
    checks = {
        "FG=Id": alg.sub(mm(F, G), alg.eye(nN)),
        "GF-Id=dH+Hd": alg.sub(alg.sub(mm(G, F), alg.eye(nM)), alg.add(mm(dM, H), mm(H, dM))),
        "HH=0": mm(H, H),
        "HG=0": mm(H, G),
        "FH=0": mm(F, H),
        "F chain map": alg.sub(mm(F, dM), mm(dN, F)),
        "G chain map": alg.sub(mm(dM, G), mm(G, dN)),
    }
    for name, R in checks.items():
        bad = alg.nonzero(R)
        if bad:
            rep.violations.append({"kind": name, "entries": bad})
    return rep


class _Alg:
    """Matrix algebra over F_p[t]/t^K, dense for small K and sparse otherwise."""

    def __init__(self, L: Lattice):
        self.L = L
        self.dense = L.K <= lat.DENSE_LIMIT

    def load(self, A):
        return lat.to_dense(A, self.L.K) if self.dense else A

    def unload(self, A):
        return lat.from_dense(A) if self.dense else A

    def mm(self, A, B):
        return lat.dense_mm(A, B, self.L.p) if self.dense else lat.mat_mul(self.L, A, B)

    def add(self, A, B):
        return (A + B) % self.L.p if self.dense else lat.mat_add(self.L, A, B)

    def sub(self, A, B):
        return (A - B) % self.L.p if self.dense else lat.mat_sub(self.L, A, B)

    def eye(self, n):
        return self.load(lat.identity(n))

    def is_zero(self, A) -> bool:
        return not A.any() if self.dense else lat.is_zero(A)

    def nonzero(self, A):
        if self.dense:
            return sorted({(int(i), int(j)) for i, j, _ in zip(*A.nonzero())})
        return lat.nonzero_entries(A)


def _series(alg: _Alg, A, l_max: int):
    """sum_{l=0}^{l_max} A^l for A nilpotent modulo t^K.

    Uses sum_{l < 2^J} A^l = prod_{j < J} (I + A^(2^j)); once 2^J exceeds
    l_max every further power of A vanishes, so the product is the full
    series.  Stops as soon as a square vanishes.
    """
    total = alg.eye(A.shape[0] if alg.dense else len(A))
    power = A
    span = 1
    while not alg.is_zero(power):
        total = alg.add(total, alg.mm(total, power))
        span *= 2
        if span > l_max:
            break
        power = alg.mm(power, power)
    return total


def apply_bpl(S: SDRData, P) -> SDRData:
    """Transfer the perturbation ``P`` of ``d_M`` along the retract.

    With A = D H the new data are
    ``d_N + F (sum A^l) D G``, ``F sum A^l``, ``(sum (H D)^l) G`` and
    ``H sum A^l``.
    """
    D = P.D if isinstance(P, Perturbation) else P
    E = S.precision
    gap = D.min_valuation()
    if gap is None:
        return SDRData(S.M, S.N, S.F.copy(), S.G.copy(), S.H.copy())
    if gap <= 0:
        raise DivergentSeries(f"perturbation raises the level by {gap}, need > 0")
    l_max = math.ceil(E / gap)
    L, N, mats = _grid(S, [D])
    alg = _Alg(L)
    dM, dN, F, G, H, Dg = (alg.load(m) for m in mats)
    mm = alg.mm
    S1 = _series(alg, mm(Dg, H), l_max)
    S2 = _series(alg, mm(H, Dg), l_max)
    F_new = mm(F, S1)
    G_new = mm(S2, G)
    H_new = mm(H, S1)
    dN_new = alg.add(dN, mm(mm(F_new, Dg), G))
    dM_new = alg.add(dM, Dg)
    p, nM, nN = S.p, S.M.n, S.N.n
    back = lambda A, r, c: from_grid(alg.unload(A), p, N, r, c)
    M_new = FilteredComplex.from_normalized(p, E, S.M.generators, back(dM_new, nM, nM), S.M.graded)
    N_new = FilteredComplex.from_normalized(p, E, S.N.generators, back(dN_new, nN, nN), S.N.graded)
    return SDRData(M_new, N_new, back(F_new, nN, nM), back(G_new, nM, nN), back(H_new, nM, nM))


# local bases and strictification ----------------------------------------


@dataclass
class LocalBlockBasis:
    """Per-block F_p bases: cycles X spanning local homology, exact cycles Y, and Z with d0 Z = Y."""

    block: List[int]
    X: List[np.ndarray] = field(default_factory=list)
    Y: List[np.ndarray] = field(default_factory=list)
    Z: List[np.ndarray] = field(default_factory=list)
    X_labels: List[int] = field(default_factory=list)


def split_differential(C: FilteredComplex) -> Tuple[np.ndarray, Matrix]:
    """Level-preserving part d0 (over F_p) and strictly raising remainder D."""
    Dn = C.normalized_matrix()
    n = C.n
    d0 = np.zeros((n, n), dtype=np.int64)
    rest = Matrix(C.p, n, n)
    for (i, j), v in Dn.data.items():
        if v.valuation() < 0:
            raise InvalidSplit("complex does not respect the filtration")
        d0[i, j] = v.coefficient(0)
        r = NovikovScalar(C.p, [t for t in v.terms if t[0] > 0])
        if not r.is_zero():
            rest.data[(i, j)] = r
    return d0, rest


def _resolve_blocks(C: FilteredComplex, blocks) -> List[List[int]]:
    if blocks is None:
        return [list(range(C.n))]
    out = []
    seen = set()
    for b in blocks:
        idx = [C.index(g) if isinstance(g, str) else int(g) for g in b]
        out.append(idx)
        seen.update(idx)
    rest = [i for i in range(C.n) if i not in seen]
    for i in rest:
        out.append([i])
    return out


def local_block_basis(d0: np.ndarray, block: Sequence[int], p: int) -> LocalBlockBasis:
    """Deterministic {X, Y, Z} basis of one block by lowest-index elimination."""
    block = list(block)
    n = d0.shape[0]
    A = d0[np.ix_(block, block)] % p
    k = len(block)
    res = LocalBlockBasis(block)
    # Z: standard vectors on columns whose image is new
    _, piv = fp.rref(A, p) if k else (None, [])
    for j in piv:
        z = np.zeros(n, dtype=np.int64)
        z[block[j]] = 1
        y = np.zeros(n, dtype=np.int64)
        y[block] = A[:, j]
        res.Z.append(z)
        res.Y.append(y % p)
    # X: kernel vectors not in the span of Y, chosen greedily
    kernel = fp.nullspace(A, p) if k else np.zeros((0, 0), dtype=np.int64)
    span = [y[block] for y in res.Y]
    cur = fp.rank(np.array(span).T, p) if span else 0
    for c in range(kernel.shape[1]):
        v = kernel[:, c]
        trial = span + [v]
        r = fp.rank(np.array(trial).T, p)
        if r > cur:
            span.append(v)
            cur = r
            x = np.zeros(n, dtype=np.int64)
            x[block] = v
            res.X.append(x)
            # label by the free column that generated this kernel vector
            lead = next(i for i in range(k) if v[i] and i not in piv)
            res.X_labels.append(block[lead])
    if len(res.X) + len(res.Y) + len(res.Z) != k:
        raise InvalidSplit("level-preserving part does not square to zero on the block")
    return res


def local_homology_dims(C: FilteredComplex, block=None) -> int:
    """Dimension of ker d0 / im d0 on a block (default: the whole complex)."""
    d0, _ = split_differential(C)
    idx = list(range(C.n)) if block is None else [C.index(g) if isinstance(g, str) else g for g in block]
    A = d0[np.ix_(idx, idx)]
    return len(idx) - 2 * fp.rank(A, C.p) if idx else 0


def _fp_matrix(M: np.ndarray, p: int) -> Matrix:
    out = Matrix(p, M.shape[0], M.shape[1])
    for i, j in zip(*np.nonzero(M % p)):
        out.data[(int(i), int(j))] = NovikovScalar.monomial(int(M[i, j]), 0, p)
    return out


def strictify(C: FilteredComplex, blocks=None) -> Tuple[FilteredComplex, SDRData]:
    """Reduce to a strict complex on local-homology generators.

    The level-preserving part d0 is eliminated block by block; the remainder
    is transferred by the perturbation lemma.  Returns the strict complex and
    the perturbed retract data relating it to the input.
    """
    p, E, n = C.p, C.precision, C.n
    d0, D = split_differential(C)
    idx_blocks = _resolve_blocks(C, blocks)
    owner = {}
    for b, idx in enumerate(idx_blocks):
        for i in idx:
            owner[i] = b
    for i, j in zip(*np.nonzero(d0)):
        if owner[int(i)] != owner[int(j)]:
            raise BlockLeak(
                f"level-preserving entry from {C.generators[j].id} to {C.generators[i].id} crosses blocks"
            )
    if np.any((d0 @ d0) % p):
        raise InvalidSplit("level-preserving part does not square to zero")
    bases = [local_block_basis(d0, idx, p) for idx in idx_blocks]
    Xs = [x for b in bases for x in b.X]
    labels = [l for b in bases for l in b.X_labels]
    Ys = [y for b in bases for y in b.Y]
    Zs = [z for b in bases for z in b.Z]
    r = len(Xs)
    basis = np.array(Xs + Ys + Zs, dtype=np.int64).T.reshape(n, n) if n else np.zeros((0, 0), dtype=np.int64)
    inv = _fp_inverse(basis, p)
    Fm = inv[:r, :]
    Gm = basis[:, :r]
    J = np.zeros((n, n), dtype=np.int64)
    for b in range(len(Ys)):
        J[r + len(Ys) + b, r + b] = 1
    Theta = (basis @ J @ inv) % p
    F = _fp_matrix(Fm, p)
    G = _fp_matrix(Gm, p)
    H = _fp_matrix((-Theta) % p, p)
    gens_M = [Generator(g.id, Fraction(0), g.degree) for g in C.generators]
    M0 = FilteredComplex.from_normalized(p, E, gens_M, _fp_matrix(d0, p), C.graded)
    gens_N = [
        Generator(C.generators[l].id, C.generators[l].action, C.generators[l].degree) for l in labels
    ]
    N0 = FilteredComplex.from_normalized(p, E, gens_N, Matrix(p, r, r), C.graded)
    S0 = SDRData(M0, N0, F, G, H)
    S = apply_bpl(S0, D)
    # restore the original actions on the large complex
    S.M = FilteredComplex.from_normalized(p, E, C.generators, S.M.normalized_matrix(), C.graded)
    return S.N, S


def _fp_inverse(A: np.ndarray, p: int) -> np.ndarray:
    n = A.shape[0]
    if n == 0:
        return A.copy()
    R, piv = fp.rref(np.concatenate([A % p, np.eye(n, dtype=np.int64)], axis=1), p)
    if piv[:n] != list(range(n)):
        raise InvalidSplit("local basis is not invertible")
    return R[:, n:]


# random instances --------------------------------------------------------


def random_sdr(seed, p: int, n_small: int, n_pairs: int, exponent_pool, precision=16):
    """Random retract together with an admissible perturbation.

    M is the direct sum of a random complex N and acyclic pairs, conjugated by
    a random invertible change of basis; the perturbation is the difference
    between d_M and its conjugate by a unipotent matrix congruent to the
    identity modulo positive valuation.
    """
    from .complex import random_complex

    rng = random.Random(seed)
    E = as_fraction(precision)
    pool = [as_fraction(e) for e in exponent_pool]
    pos = [e for e in pool if e > 0]
    Nc = random_complex(rng.randrange(1 << 30), n_small, pos, None, p=p, precision=E)
    dN = Nc.normalized_matrix()
    n = n_small + 2 * n_pairs
    dM = Matrix(p, n, n)
    dM.data.update(dN.data)
    H = Matrix(p, n, n)
    for k in range(n_pairs):
        z, y = n_small + 2 * k, n_small + 2 * k + 1
        c = rng.randrange(1, p)
        dM.data[(y, z)] = NovikovScalar.monomial(c, 0, p)
        H.data[(z, y)] = NovikovScalar.monomial(-pow(c, -1, p), 0, p)
    F = Matrix(p, n_small, n)
    G = Matrix(p, n, n_small)
    for i in range(n_small):
        F.data[(i, i)] = NovikovScalar.one(p)
        G.data[(i, i)] = NovikovScalar.one(p)
    # conjugate by a random invertible change of basis
    for _ in range(2 * n):
        if n < 2:
            break
        i, j = rng.sample(range(n), 2)
        e = rng.choice([Fraction(0)] + pool)
        c = rng.randrange(1, p)
        A = Matrix.identity(p, n)
        A.data[(i, j)] = NovikovScalar.monomial(c, e, p)
        Ai = Matrix.identity(p, n)
        Ai.data[(i, j)] = NovikovScalar.monomial(-c, e, p)
        dM = A.matmul(dM, E).matmul(Ai, E)
        H = A.matmul(H, E).matmul(Ai, E)
        G = A.matmul(G, E)
        F = F.matmul(Ai, E)
    # perturbation from a unipotent conjugation
    dP = dM
    for _ in range(n):
        if n < 2:
            break
        i, j = rng.sample(range(n), 2)
        e = rng.choice(pos)
        c = rng.randrange(1, p)
        A = Matrix.identity(p, n)
        A.data[(i, j)] = NovikovScalar.monomial(c, e, p)
        Ai = Matrix.identity(p, n)
        Ai.data[(i, j)] = NovikovScalar.monomial(-c, e, p)
        dP = A.matmul(dP, E).matmul(Ai, E)
    D = (dP - dM).truncate(E)
    gens_M = [Generator(f"m{i}") for i in range(n)]
    gens_N = [Generator(f"n{i}") for i in range(n_small)]
    M = FilteredComplex.from_normalized(p, E, gens_M, dM.truncate(E))
    N = FilteredComplex.from_normalized(p, E, gens_N, dN.truncate(E))
    return SDRData(M, N, F.truncate(E), G.truncate(E), H.truncate(E)), Perturbation.of(D)
