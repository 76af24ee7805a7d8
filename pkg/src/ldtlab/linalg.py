"""Row reduction over GF(q), batched over a leading axis."""
from __future__ import annotations

import numpy as np

from .errors import InsufficientDataError, NoFitError, UsageError
from .gf import inv_array


def rref_batch(A, q: int, ncols: int | None = None):
    """Reduced row-echelon form of every matrix in a ``(B, r, c)`` stack.

    Only the first ``ncols`` columns are used as pivot candidates (all by
    default), which lets callers reduce augmented systems.

    Returns ``(R, pivots, rank)``: ``pivots[b, i]`` is the pivot column of row
    ``i`` (``-1`` past the rank).
    """
    A = np.array(A, dtype=np.int64) % q
    if A.ndim != 3:
        raise UsageError(f"expected a (B, r, c) stack, got shape {A.shape}")
    B, r, c = A.shape
    ncols = c if ncols is None else ncols
    rank = np.zeros(B, dtype=np.int64)
    pivots = np.full((B, r), -1, dtype=np.int64)
    rows = np.arange(r)
    for j in range(ncols):
        cand = (A[:, :, j] != 0) & (rows[None, :] >= rank[:, None])
        has = cand.any(axis=1)
        if not has.any():
            continue
        b = np.nonzero(has)[0]
        i = cand[b].argmax(axis=1)
        rb = rank[b]
        swap = i != rb
        if swap.any():
            bs, is_, rs = b[swap], i[swap], rb[swap]
            tmp = A[bs, is_].copy()
            A[bs, is_] = A[bs, rs]
            A[bs, rs] = tmp
        prow = A[b, rb] * inv_array(A[b, rb, j], q)[:, None] % q
        A[b, rb] = prow
        factors = A[b, :, j].copy()
        factors[np.arange(len(b)), rb] = 0
        A[b] = (A[b] - factors[:, :, None] * prow[:, None, :]) % q
        pivots[b, rb] = j
        rank[b] += 1
        if (rank >= r).all():
            break
    return A, pivots, rank


def rref(A, q: int, ncols: int | None = None):
    A = np.asarray(A, dtype=np.int64)
    R, piv, rank = rref_batch(A[None], q, ncols)
    k = int(rank[0])
    return R[0], piv[0, :k], k


def rank(A, q: int) -> int:
    A = np.asarray(A, dtype=np.int64)
    if A.size == 0:
        return 0
    return rref(A, q)[2]


def nullspace(A, q: int) -> np.ndarray:
    """Basis (as rows) of ``{v : A v = 0}``."""
    A = np.asarray(A, dtype=np.int64)
    r, c = A.shape
    R, piv, k = rref(A, q)
    free = [j for j in range(c) if j not in set(piv.tolist())]
    basis = np.zeros((len(free), c), dtype=np.int64)
    for t, f in enumerate(free):
        basis[t, f] = 1
        for i, p in enumerate(piv):
            basis[t, p] = (-R[i, f]) % q
    return basis


def solve(A, b, q: int, require_unique: bool = True):
    """Solve ``A x = b`` over GF(q).

    Raises :class:`NoFitError` when inconsistent and
    :class:`InsufficientDataError` when the solution is not unique (unless
    ``require_unique`` is false, in which case free variables are set to 0).
    """
    A = np.asarray(A, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64).reshape(-1, 1)
    r, c = A.shape
    aug = np.concatenate([A, b], axis=1)
    R, piv, k = rref(aug, q, ncols=c)
    if (R[k:, c] != 0).any():
        raise NoFitError("inconsistent linear system")
    if require_unique and k < c:
        raise InsufficientDataError(f"underdetermined system: rank {k} < {c} unknowns")
    x = np.zeros(c, dtype=np.int64)
    x[piv] = R[:k, c]
    return x


def solve_batch(A, b, q: int):
    """Solve square systems ``A[i] x = b[i]``; returns ``(x, ok)`` with ``ok``
    false for singular systems."""
    A = np.asarray(A, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    B, n, _ = A.shape
    aug = np.concatenate([A, b[:, :, None]], axis=2)
    R, piv, k = rref_batch(aug, q, ncols=n)
    ok = k == n
    return R[:, :, n], ok
