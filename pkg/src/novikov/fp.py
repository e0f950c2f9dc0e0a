"""Dense linear algebra over F_p on numpy integer arrays."""
from __future__ import annotations

from typing import List, Optional, Tuple

import numpy as np


def as_array(M, p: int) -> np.ndarray:
    A = np.array(M, dtype=np.int64)
    if A.ndim == 1:
        A = A.reshape(1, -1) if A.size else A.reshape(0, 0)
    return A % p


def rref(M, p: int) -> Tuple[np.ndarray, List[int]]:
    """Reduced row echelon form and pivot columns (lowest-index pivoting)."""
    A = as_array(M, p).copy()
    rows, cols = A.shape
    pivots: List[int] = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        nz = np.nonzero(A[r:, c])[0]
        if nz.size == 0:
            continue
        k = r + int(nz[0])
        if k != r:
            A[[r, k]] = A[[k, r]]
        A[r] = (A[r] * pow(int(A[r, c]), -1, p)) % p
        col = A[:, c].copy()
        col[r] = 0
        nzr = np.nonzero(col)[0]
        if nzr.size:
            A[nzr] = (A[nzr] - np.outer(col[nzr], A[r])) % p
        pivots.append(c)
        r += 1
    return A, pivots


def rank(M, p: int) -> int:
    A = as_array(M, p)
    if A.size == 0:
        return 0
    return len(rref(A, p)[1])


def nullspace(M, p: int) -> np.ndarray:
    """Basis of {v : M v = 0} as columns."""
    A = as_array(M, p)
    cols = A.shape[1]
    R, piv = rref(A, p)
    free = [c for c in range(cols) if c not in piv]
    basis = np.zeros((cols, len(free)), dtype=np.int64)
    for k, f in enumerate(free):
        basis[f, k] = 1
        for i, pc in enumerate(piv):
            basis[pc, k] = (-R[i, f]) % p
    return basis


def solve(M, b, p: int) -> Tuple[Optional[np.ndarray], Optional[np.ndarray]]:
    """Solve M x = b.

    Returns ``(x, None)`` on success, otherwise ``(None, y)`` where ``y`` is a
    certificate of inconsistency: ``y M = 0`` and ``y b != 0``.
    """
    A = as_array(M, p)
    rows, cols = A.shape
    bb = np.array(b, dtype=np.int64).reshape(rows) % p
    aug = np.concatenate([A, bb.reshape(-1, 1), np.eye(rows, dtype=np.int64)], axis=1)
    R, piv = rref(aug, p)
    if cols in piv:
        i = piv.index(cols)
        y = R[i, cols + 1:] % p
        return None, y
    x = np.zeros(cols, dtype=np.int64)
    for i, c in enumerate(piv):
        if c < cols:
            x[c] = R[i, cols]
    return x % p, None
