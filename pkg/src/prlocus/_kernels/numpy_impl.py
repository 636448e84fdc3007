"""Pure numpy kernels; the fallback when numba is unavailable or disabled.

All arithmetic is over F_q with q prime.  Work is chunked so peak memory
stays bounded regardless of q**nvars.
"""

from __future__ import annotations

import numpy as np

NAME = "numpy"

_CHUNK = 1 << 16


def _inverse_table(q: int) -> np.ndarray:
    inv = np.zeros(q, dtype=np.int64)
    for a in range(1, q):
        inv[a] = pow(a, q - 2, q)
    return inv


def _digits(start: int, stop: int, q: int, nvars: int) -> np.ndarray:
    """Base-q digit rows for the integer range [start, stop)."""
    idx = np.arange(start, stop, dtype=np.int64)
    out = np.empty((stop - start, nvars), dtype=np.int64)
    for v in range(nvars):
        out[:, v] = idx % q
        idx = idx // q
    return out


def _batched_rank(A: np.ndarray, q: int, inv: np.ndarray) -> np.ndarray:
    """Ranks of a (N, m, n) batch over F_q via masked Gaussian elimination."""
    A = A.astype(np.int64) % q
    N, m, n = A.shape
    rank = np.zeros(N, dtype=np.int64)
    idx = np.arange(N)
    rowidx = np.arange(m)[None, :]
    for col in range(n):
        eligible = (rowidx >= rank[:, None]) & (A[:, :, col] != 0)
        has = eligible.any(axis=1)
        if not has.any():
            continue
        pivrow = np.where(has, eligible.argmax(axis=1), 0)
        r = rank.copy()
        piv = A[idx, pivrow, :].copy()
        cur = A[idx, r, :].copy()
        sel = idx[has]
        A[sel, pivrow[has], :] = cur[has]
        A[sel, r[has], :] = piv[has]
        pval = A[idx, r, col]
        A[sel, r[has], :] = (A[sel, r[has], :] * inv[pval[has]][:, None]) % q
        below = (rowidx > r[:, None]) & has[:, None]
        factor = np.where(below, A[:, :, col], 0)
        prow = A[idx, r, :]
        A = (A - factor[:, :, None] * prow[:, None, :]) % q
        rank = rank + has
    return rank


def count_flag_matrices(q: int):
    """Exhaustive scan of flag-lowering nilpotents on dims (2, 4, 6).

    Parameters are the B block (rows 0-1, cols 2-3) and the C block
    (rows 0-3, cols 4-5), q**12 matrices total.  Counts those with
    pi^2 = 0, rank pi = 3 and pi(V_2) = V_1.
    """
    inv = _inverse_table(q)
    total = q**12
    count = 0
    for start in range(0, total, _CHUNK):
        stop = min(start + _CHUNK, total)
        d = _digits(start, stop, q, 12)
        N = stop - start
        pi = np.zeros((N, 6, 6), dtype=np.int64)
        pi[:, 0, 2] = d[:, 0]
        pi[:, 0, 3] = d[:, 1]
        pi[:, 1, 2] = d[:, 2]
        pi[:, 1, 3] = d[:, 3]
        for i in range(4):
            pi[:, i, 4] = d[:, 4 + 2 * i]
            pi[:, i, 5] = d[:, 5 + 2 * i]
        sq = np.matmul(pi, pi) % q
        ok = ~sq.any(axis=(1, 2))
        if not ok.any():
            continue
        cand = pi[ok]
        full_rank = _batched_rank(cand, q, inv)
        img2_rank = _batched_rank(cand[:, :, 2:4], q, inv)
        count += int(np.count_nonzero((full_rank == 3) & (img2_rank == 2)))
    return count, total


def solve_affine(q, nvars, eq_idx, coeffs, expos):
    """All points of F_q^nvars where every listed equation vanishes.

    Equations are sums of monomials: monomial m has coefficient coeffs[m],
    exponent row expos[m] and belongs to equation eq_idx[m].  Returns the
    solutions as an (n_sol, nvars) int64 array, rows in grid order.
    """
    eq_idx = np.asarray(eq_idx, dtype=np.int64)
    coeffs = np.asarray(coeffs, dtype=np.int64) % q
    expos = np.asarray(expos, dtype=np.int64)
    n_eqs = int(eq_idx.max()) + 1 if eq_idx.size else 0
    total = q**nvars
    hits = []
    for start in range(0, total, _CHUNK):
        stop = min(start + _CHUNK, total)
        pts = _digits(start, stop, q, nvars)
        vals = np.zeros((stop - start, max(n_eqs, 1)), dtype=np.int64)
        for m in range(len(coeffs)):
            term = np.full(stop - start, coeffs[m], dtype=np.int64)
            for v in range(nvars):
                ex = int(expos[m, v])
                if ex:
                    term = (term * pow_mod(pts[:, v], ex, q)) % q
            vals[:, eq_idx[m]] = (vals[:, eq_idx[m]] + term) % q
        mask = ~vals.any(axis=1)
        if mask.any():
            hits.append(pts[mask])
    if not hits:
        return np.empty((0, nvars), dtype=np.int64)
    return np.concatenate(hits, axis=0)


def pow_mod(base: np.ndarray, exp: int, q: int) -> np.ndarray:
    out = np.ones_like(base)
    b = base % q
    e = exp
    while e:
        if e & 1:
            out = (out * b) % q
        b = (b * b) % q
        e >>= 1
    return out
