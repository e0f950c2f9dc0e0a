"""Brute-force reference computations that share no code with the package.

Everything here works with plain Python integers and lists of lists over
F_p.  A Lambda_0 matrix whose exponents lie on (1/q)Z is expanded into its
block Toeplitz matrix over F_p acting on (F_p[t]/t^j)^n, t = T^(1/q).
"""
from fractions import Fraction


def rank_mod_p(rows, p):
    """Rank of an integer matrix over F_p by plain Gaussian elimination."""
    m = [[x % p for x in r] for r in rows]
    if not m:
        return 0
    ncols = len(m[0])
    rank = 0
    for c in range(ncols):
        piv = next((r for r in range(rank, len(m)) if m[r][c]), None)
        if piv is None:
            continue
        m[rank], m[piv] = m[piv], m[rank]
        inv = pow(m[rank][c], p - 2, p)
        m[rank] = [(x * inv) % p for x in m[rank]]
        for r in range(len(m)):
            if r != rank and m[r][c]:
                f = m[r][c]
                m[r] = [(a - f * b) % p for a, b in zip(m[r], m[rank])]
        rank += 1
    return rank


def _columns(entries, n, q):
    cols = [[] for _ in range(n)]
    for (r, c), terms in entries.items():
        for e, coeff in terms:
            k = e * q
            assert k.denominator == 1 and k >= 0
            cols[c].append((r, int(k), coeff))
    return cols


def truncated_rank(entries, n, p, q, j):
    """F_p rank of multiplication by the matrix on (F_p[t]/t^j)^n, t = T^(1/q).

    ``entries`` maps (row, col) to a list of (Fraction exponent, coeff).  The
    block Toeplitz matrix is eliminated column by column with sparse rows.
    """
    pivots = {}
    rank = 0
    for c, col_terms in enumerate(_columns(entries, n, q)):
        for s in range(j):
            col = {}
            for r, k, coeff in col_terms:
                if s + k < j:
                    key = r * j + s + k
                    col[key] = (col.get(key, 0) + coeff) % p
            col = {k: v for k, v in col.items() if v}
            while col:
                r = min(col)
                pc = pivots.get(r)
                if pc is None:
                    inv = pow(col[r], p - 2, p)
                    pivots[r] = {k: v * inv % p for k, v in col.items()}
                    rank += 1
                    break
                f = col[r]
                for k, v in pc.items():
                    x = (col.get(k, 0) - f * v) % p
                    if x:
                        col[k] = x
                    else:
                        col.pop(k, None)
    return rank


def elementary_divisors(entries, n, p, q, K):
    """t-valuations (< K) of the elementary divisors, from truncated ranks.

    rank(D mod t^j) = sum_i min(j, k_i), so r(j) - r(j-1) counts the
    divisors with k_i < j.  The total count below K comes from the top two
    truncations; j then runs upward until every divisor is accounted for.
    """
    total = truncated_rank(entries, n, p, q, K) - truncated_rank(entries, n, p, q, K - 1)
    out = []
    prev_rank, j = 0, 1
    while len(out) < total:
        r = truncated_rank(entries, n, p, q, j)
        below = r - prev_rank
        out += [j - 1] * (below - len(out))
        prev_rank, j = r, j + 1
    return out


def barcode_oracle(C, q):
    """(apparent free rank, sorted bar lengths) for levels on the grid (1/q)Z.

    Uses the level-relative matrix T^(a(y)-a(x)) d[y][x], recomputed here
    from the raw entries and actions.  Bars at or beyond the precision are
    invisible to the truncated ring and count towards the free rank.
    """
    n, p = C.n, C.p
    K = C.precision * q
    assert K.denominator == 1
    K = int(K)
    acts = [g.action for g in C.generators]
    entries = {}
    for (i, j), v in C.d.data.items():
        shift = acts[i] - acts[j]
        entries[(i, j)] = [(e + shift, c) for e, c in v.terms if e + shift < C.precision]
    divs = elementary_divisors(entries, n, p, q, K)
    bars = sorted(Fraction(k, q) for k in divs if k > 0)
    return n - 2 * len(divs), bars


def brute_force_inverse(a_coeffs, p, K):
    """All c with (sum a_i t^i)(sum c_i t^i) = 1 mod t^K, by enumeration."""
    from itertools import product

    sols = []
    for c in product(range(p), repeat=K):
        prod = [0] * K
        for i, x in enumerate(a_coeffs[:K]):
            for j, y in enumerate(c):
                if i + j < K:
                    prod[i + j] = (prod[i + j] + x * y) % p
        if prod == [1] + [0] * (K - 1):
            sols.append(list(c))
    return sols


def nullspace_mod_p(rows, ncols, p):
    """Basis of the kernel of an integer matrix over F_p (list of column vectors)."""
    m = [[x % p for x in r] for r in rows]
    pivots = []
    rank = 0
    for c in range(ncols):
        piv = next((r for r in range(rank, len(m)) if m[r][c]), None)
        if piv is None:
            continue
        m[rank], m[piv] = m[piv], m[rank]
        inv = pow(m[rank][c], p - 2, p)
        m[rank] = [(x * inv) % p for x in m[rank]]
        for r in range(len(m)):
            if r != rank and m[r][c]:
                f = m[r][c]
                m[r] = [(a - f * b) % p for a, b in zip(m[r], m[rank])]
        pivots.append(c)
        rank += 1
    basis = []
    for free in (c for c in range(ncols) if c not in pivots):
        v = [0] * ncols
        v[free] = 1
        for r, c in enumerate(pivots):
            v[c] = (-m[r][free]) % p
        basis.append(v)
    return basis


def _quotient(C, c, d, q):
    """Monomial basis, index and F_p differential of the window quotient complex."""
    p = C.p
    acts = [g.action for g in C.generators]
    basis = []
    for i, a in enumerate(acts):
        k = max(a, c) * q
        k = int(k) if k.denominator == 1 else int(k) + 1
        while Fraction(k, q) < d:
            basis.append((i, Fraction(k, q) - a))
            k += 1
    index = {b: t for t, b in enumerate(basis)}
    size = len(basis)
    M = [[0] * size for _ in range(size)]
    for (i, j), v in C.d.data.items():
        for col, (src, e0) in enumerate(basis):
            if src != j:
                continue
            for e, coeff in v.terms:
                key = (i, e0 + e)
                if key in index:
                    M[index[key]][col] = (M[index[key]][col] + coeff) % p
    return basis, index, M


def _move(vec, basis, index, size, shift=Fraction(0)):
    """Re-express a vector in another monomial basis, dropping monomials outside it."""
    w = [0] * size
    for t, x in enumerate(vec):
        if x:
            i, e = basis[t]
            key = (i, e + shift)
            if key in index:
                w[index[key]] = x
    return w


def window_oracle(C, c, d, q):
    """Homology of the quotient of level->=c chains by level->=d chains, by brute force.

    The quotient is a finite F_p vector space with basis the monomials
    T^e x, e >= 0 on the grid (1/q)Z, c <= a(x) + e < d.  Returns
    (F_p dimension, number of Lambda_0 generators), the latter being
    dim H - dim tH with t = T^(1/q).
    """
    p = C.p
    basis, index, M = _quotient(C, c, d, q)
    size = len(basis)
    if not size:
        return 0, 0
    rB = rank_mod_p(M, p)
    Z = nullspace_mod_p(M, size, p)
    dim = len(Z) - rB
    tZ = [_move(z, basis, index, size, Fraction(1, q)) for z in Z]
    cols = [list(r) for r in zip(*M)] + tZ
    dim_tH = rank_mod_p(cols, p) - rB
    return dim, dim - dim_tH


def persistence_oracle(C, source, target, q):
    """Rank of H(source window) -> H(target window) after reducing modulo t.

    With Z1 the cycles of the source quotient, B2 the boundaries and Z2 the
    cycles of the target quotient, the rank is
    rank[B2 | t Z2 | i(Z1)] - rank[B2 | t Z2].
    """
    p = C.p
    b1, i1, M1 = _quotient(C, *source, q)
    b2, i2, M2 = _quotient(C, *target, q)
    n2 = len(b2)
    if not b1 or not n2:
        return 0
    Z1 = nullspace_mod_p(M1, len(b1), p)
    Z2 = nullspace_mod_p(M2, n2, p)
    base = [list(r) for r in zip(*M2)] + [_move(z, b2, i2, n2, Fraction(1, q)) for z in Z2]
    images = [_move(z, b1, i2, n2) for z in Z1]
    return rank_mod_p(base + images, p) - rank_mod_p(base, p)
