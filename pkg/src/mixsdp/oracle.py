"""Brute-force references for small instances.

Test and debugging use only; the production path never imports this.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MAX_ENUM_VARS = 20
MAX_DENSE = 64


class OracleRefusal(ValueError):
    pass


@dataclass
class OracleResult:
    optimum_value: float
    optimum_witness: np.ndarray
    enumerated: int


def _patterns(bits: int, start: int, stop: int) -> np.ndarray:
    """Rows of 0/1 bits for the integers start..stop-1 (LSB = column 0)."""
    codes = np.arange(start, stop, dtype=np.int64)
    return ((codes[:, None] >> np.arange(bits, dtype=np.int64)) & 1).astype(np.int8)


def brute_maxcut(g, chunk: int = 1 << 14) -> OracleResult:
    """Exhaustive MAXCUT with vertex 0 fixed to +1 (2^(n-1) patterns)."""
    n = g.n
    if n > MAX_ENUM_VARS:
        raise OracleRefusal(f"brute_maxcut refuses n={n} > {MAX_ENUM_VARS}")
    u, v, w = g.src, g.dst, g.weight
    total = 1 << (n - 1)
    best_val, best_signs = -np.inf, None
    for start in range(0, total, chunk):
        bits = _patterns(n - 1, start, min(total, start + chunk))
        side = np.concatenate([np.zeros((bits.shape[0], 1), np.int8), bits], axis=1)
        cut = (side[:, u] != side[:, v]) @ w if len(w) else np.zeros(bits.shape[0])
        a = int(np.argmax(cut))
        if cut[a] > best_val:
            best_val = float(cut[a])
            best_signs = np.where(side[a] == 0, 1, -1).astype(np.int8)
    return OracleResult(best_val, best_signs, total)


def brute_maxsat(f, chunk: int = 1 << 14) -> OracleResult:
    """Exhaustive MAXSAT over all 2^n_vars assignments."""
    n = f.n_vars
    if n > MAX_ENUM_VARS:
        raise OracleRefusal(f"brute_maxsat refuses n_vars={n} > {MAX_ENUM_VARS}")
    total = 1 << n
    best_val, best = -np.inf, None
    for start in range(0, total, chunk):
        vals = _patterns(n, start, min(total, start + chunk)).astype(bool)
        score = np.zeros(vals.shape[0])
        for weight, lits in f.clauses:
            sat = np.zeros(vals.shape[0], dtype=bool)
            for lit in lits:
                col = vals[:, abs(lit) - 1]
                sat |= col if lit > 0 else ~col
            score += weight * sat
        a = int(np.argmax(score))
        if score[a] > best_val:
            best_val = float(score[a])
            best = vals[a].copy()
    return OracleResult(best_val, best, total)


def dense_min_eig(S, tol: float = 1e-10, max_sweeps: int = 100) -> float:
    """Smallest eigenvalue of a symmetric matrix by cyclic Jacobi rotations."""
    A = np.array(S, dtype=np.float64)
    n = A.shape[0]
    if A.ndim != 2 or A.shape[1] != n:
        raise ValueError("S must be square")
    if n > MAX_DENSE:
        raise OracleRefusal(f"dense_min_eig refuses size {n} > {MAX_DENSE}")
    if not np.allclose(A, A.T, atol=1e-12 * max(1.0, np.abs(A).max())):
        raise ValueError("S must be symmetric")
    A = (A + A.T) / 2
    scale = max(1.0, float(np.abs(A).max()))
    for _ in range(max_sweeps):
        off = np.sqrt(np.sum(np.tril(A, -1) ** 2))
        if off <= tol * 1e-3 * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if apq == 0.0:
                    continue
                tau = (A[q, q] - A[p, p]) / (2.0 * apq)
                t = np.sign(tau) / (abs(tau) + np.sqrt(1.0 + tau * tau)) if tau != 0 else 1.0
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                Ap = A[:, p].copy()
                Aq = A[:, q].copy()
                A[:, p] = c * Ap - s * Aq
                A[:, q] = s * Ap + c * Aq
                Ap = A[p, :].copy()
                Aq = A[q, :].copy()
                A[p, :] = c * Ap - s * Aq
                A[q, :] = s * Ap + c * Aq
                A[p, q] = A[q, p] = 0.0
    return float(np.min(np.diag(A)))
