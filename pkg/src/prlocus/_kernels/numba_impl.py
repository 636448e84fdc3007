"""Numba-jitted kernels, same contract as numpy_impl.

Importing this module requires numba; the dispatcher only does so when the
import is known to succeed.
"""

from __future__ import annotations

import numpy as np
from numba import njit

NAME = "numba"


@njit(cache=True)
def _rank_mod(A, q, inv):
    m, n = A.shape
    rank = 0
    for col in range(n):
        piv = -1
        for row in range(rank, m):
            if A[row, col] % q:
                piv = row
                break
        if piv < 0:
            continue
        if piv != rank:
            for j in range(n):
                tmp = A[rank, j]
                A[rank, j] = A[piv, j]
                A[piv, j] = tmp
        pinv = inv[A[rank, col] % q]
        for j in range(n):
            A[rank, j] = (A[rank, j] * pinv) % q
        for row in range(rank + 1, m):
            f = A[row, col] % q
            if f:
                for j in range(n):
                    A[row, j] = (A[row, j] - f * A[rank, j]) % q
        rank += 1
    return rank


@njit(cache=True)
def _count_flag(q, inv):
    total = q**12
    count = 0
    pi = np.zeros((6, 6), dtype=np.int64)
    work = np.zeros((6, 6), dtype=np.int64)
    sub = np.zeros((6, 2), dtype=np.int64)
    for idx in range(total):
        x = idx
        pi[0, 2] = x % q
        x //= q
        pi[0, 3] = x % q
        x //= q
        pi[1, 2] = x % q
        x //= q
        pi[1, 3] = x % q
        x //= q
        for i in range(4):
            pi[i, 4] = x % q
            x //= q
            pi[i, 5] = x % q
            x //= q
        # pi^2 = 0
        sq_zero = True
        for i in range(6):
            if not sq_zero:
                break
            for j in range(6):
                acc = 0
                for k in range(6):
                    acc += pi[i, k] * pi[k, j]
                if acc % q:
                    sq_zero = False
                    break
        if not sq_zero:
            continue
        # rank pi = 3
        for i in range(6):
            for j in range(6):
                work[i, j] = pi[i, j]
        if _rank_mod(work, q, inv) != 3:
            continue
        # pi(V_2) = V_1: the image of cols 2-3 must fill the 2-dim piece
        for i in range(6):
            sub[i, 0] = pi[i, 2]
            sub[i, 1] = pi[i, 3]
        if _rank_mod(sub, q, inv) == 2:
            count += 1
    return count


@njit(cache=True)
def _solve_affine(q, nvars, n_eqs, eq_idx, coeffs, expos, out):
    total = q**nvars
    pt = np.zeros(nvars, dtype=np.int64)
    n_sol = 0
    for idx in range(total):
        x = idx
        for v in range(nvars):
            pt[v] = x % q
            x //= q
        good = True
        for e in range(n_eqs):
            acc = 0
            for m in range(len(coeffs)):
                if eq_idx[m] != e:
                    continue
                term = coeffs[m]
                for v in range(nvars):
                    ex = expos[m, v]
                    for _ in range(ex):
                        term = (term * pt[v]) % q
                acc = (acc + term) % q
            if acc % q:
                good = False
                break
        if good:
            if n_sol < out.shape[0]:
                for v in range(nvars):
                    out[n_sol, v] = pt[v]
            n_sol += 1
    return n_sol


def count_flag_matrices(q: int):
    inv = np.zeros(q, dtype=np.int64)
    for a in range(1, q):
        inv[a] = pow(a, q - 2, q)
    return int(_count_flag(q, inv)), q**12


def solve_affine(q, nvars, eq_idx, coeffs, expos):
    eq_idx = np.asarray(eq_idx, dtype=np.int64)
    coeffs = np.asarray(coeffs, dtype=np.int64) % q
    expos = np.asarray(expos, dtype=np.int64).reshape(len(coeffs), nvars)
    n_eqs = int(eq_idx.max()) + 1 if eq_idx.size else 0
    # counting pass first keeps the allocation exact
    probe = np.zeros((0, nvars), dtype=np.int64)
    n_sol = _solve_affine(q, nvars, n_eqs, eq_idx, coeffs, expos, probe)
    out = np.zeros((n_sol, nvars), dtype=np.int64)
    if n_sol:
        _solve_affine(q, nvars, n_eqs, eq_idx, coeffs, expos, out)
    return out
