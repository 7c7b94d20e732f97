"""Compiled inner loops. Columns of V are rows of ``W`` (n x k, C order)."""

import math

import numpy as np
from numba import njit


@njit(cache=True)
def objective(indptr, indices, data, W):
    n, k = W.shape
    f = 0.0
    for i in range(n):
        for p in range(indptr[i], indptr[i + 1]):
            j = indices[p]
            s = 0.0
            for t in range(k):
                s += W[i, t] * W[j, t]
            f += data[p] * s
    return f


@njit(cache=True)
def row_products(indptr, indices, data, W, out):
    """out[i] = V c_i (the i-th column of V C)."""
    n, k = W.shape
    for i in range(n):
        for t in range(k):
            out[i, t] = 0.0
        for p in range(indptr[i], indptr[i + 1]):
            j = indices[p]
            c = data[p]
            for t in range(k):
                out[i, t] += c * W[j, t]


@njit(cache=True)
def sweep_plain(indptr, indices, data, W, order, delta, y, degen, g):
    """One Gauss-Seidel pass of v_i := -g_i/|g_i|.

    Returns (sum_i y_i |v_i - v_i_new|^2, degenerate hit count).
    """
    k = W.shape[1]
    rhs = 0.0
    hits = 0
    for q in range(order.shape[0]):
        i = order[q]
        for t in range(k):
            g[t] = 0.0
        for p in range(indptr[i], indptr[i + 1]):
            j = indices[p]
            c = data[p]
            for t in range(k):
                g[t] += c * W[j, t]
        nrm = 0.0
        for t in range(k):
            nrm += g[t] * g[t]
        nrm = math.sqrt(nrm)
        y[i] = nrm
        if nrm < delta:
            degen[i] = True
            hits += 1
            continue
        d2 = 0.0
        for t in range(k):
            nv = -g[t] / nrm
            d = W[i, t] - nv
            d2 += d * d
            W[i, t] = nv
        rhs += nrm * d2
    return rhs, hits


@njit(cache=True)
def sweep_step(indptr, indices, data, W, order, theta, y, g):
    """One pass of v_i := normalize(v_i - theta g_i).

    Returns sum_i (1 + y_i)/theta |v_i - v_i_new|^2.
    """
    k = W.shape[1]
    rhs = 0.0
    for q in range(order.shape[0]):
        i = order[q]
        for t in range(k):
            g[t] = 0.0
        for p in range(indptr[i], indptr[i + 1]):
            j = indices[p]
            c = data[p]
            for t in range(k):
                g[t] += c * W[j, t]
        nrm = 0.0
        for t in range(k):
            g[t] = W[i, t] - theta * g[t]
            nrm += g[t] * g[t]
        nrm = math.sqrt(nrm)
        y[i] = nrm
        d2 = 0.0
        for t in range(k):
            nv = g[t] / nrm
            d = W[i, t] - nv
            d2 += d * d
            W[i, t] = nv
        rhs += (1.0 + nrm) / theta * d2
    return rhs


@njit(cache=True)
def clause_vectors(cptr, cidx, csign, W, Z):
    """Z[j] = sum_i s_ij v_i over the clause's entries (truth index included)."""
    m = cptr.shape[0] - 1
    k = W.shape[1]
    for j in range(m):
        for t in range(k):
            Z[j, t] = 0.0
        for p in range(cptr[j], cptr[j + 1]):
            i = cidx[p]
            s = csign[p]
            for t in range(k):
                Z[j, t] += s * W[i, t]


@njit(cache=True)
def clause_objective(Z, cw, clen):
    """<C, V^T V> for C = sum_j w_j s_j s_j^T with the diagonal removed."""
    m, k = Z.shape
    f = 0.0
    for j in range(m):
        s = 0.0
        for t in range(k):
            s += Z[j, t] * Z[j, t]
        f += cw[j] * (s - (clen[j] + 1.0))
    return f


@njit(cache=True)
def maxsat_sweep(vptr, vclause, vsign, cw, W, Z, theta, delta, y, degen, g):
    """Incremental sweep over variables 1..n (column 0 stays fixed).

    theta <= 0 selects the plain update, otherwise the step-size update.
    Returns (identity right-hand side, degenerate hit count).
    """
    n = W.shape[0]
    k = W.shape[1]
    rhs = 0.0
    hits = 0
    for i in range(1, n):
        for t in range(k):
            g[t] = 0.0
        wsum = 0.0
        for p in range(vptr[i], vptr[i + 1]):
            j = vclause[p]
            a = cw[j] * vsign[p]
            wsum += cw[j]
            for t in range(k):
                g[t] += a * Z[j, t]
        # drop v_i's own contribution: sum_j w_j s_ij^2 v_i
        for t in range(k):
            g[t] -= wsum * W[i, t]
        if theta > 0.0:
            for t in range(k):
                g[t] = W[i, t] - theta * g[t]
        nrm = 0.0
        for t in range(k):
            nrm += g[t] * g[t]
        nrm = math.sqrt(nrm)
        y[i] = nrm
        if theta <= 0.0 and nrm < delta:
            degen[i] = True
            hits += 1
            continue
        scale = 1.0 / nrm if theta > 0.0 else -1.0 / nrm
        d2 = 0.0
        for t in range(k):
            nv = g[t] * scale
            d = nv - W[i, t]
            d2 += d * d
            g[t] = d
            W[i, t] = nv
        for p in range(vptr[i], vptr[i + 1]):
            j = vclause[p]
            s = vsign[p]
            for t in range(k):
                Z[j, t] += s * g[t]
        if theta > 0.0:
            rhs += (1.0 + nrm) / theta * d2
        else:
            rhs += nrm * d2
    return rhs, hits


@njit(cache=True)
def power_shifted(indptr, indices, data, diag, sigma, x, max_iters, tol, check_every):
    """Power iteration on sigma*I - S, S = C + diag(diag).

    Returns (rayleigh quotient of S, residual norm |Sx - rho x|, iterations).
    """
    n = x.shape[0]
    Sx = np.empty(n)
    rho = 0.0
    res = np.inf
    it = 0
    while True:
        for i in range(n):
            s = diag[i] * x[i]
            for p in range(indptr[i], indptr[i + 1]):
                s += data[p] * x[indices[p]]
            Sx[i] = s
        if it % check_every == 0 or it >= max_iters:
            rho = 0.0
            for i in range(n):
                rho += x[i] * Sx[i]
            r2 = 0.0
            for i in range(n):
                d = Sx[i] - rho * x[i]
                r2 += d * d
            res = math.sqrt(r2)
            if res <= tol or it >= max_iters:
                break
        nrm = 0.0
        for i in range(n):
            x[i] = sigma * x[i] - Sx[i]
            nrm += x[i] * x[i]
        nrm = math.sqrt(nrm)
        if nrm == 0.0:
            # Sx = sigma x exactly; only reachable from a random start when S = sigma*I
            rho = sigma
            res = 0.0
            break
        for i in range(n):
            x[i] /= nrm
        it += 1
    return rho, res, it


@njit(cache=True)
def shifted_matvec(indptr, indices, data, diag, x, out):
    """out = (C + diag(diag)) x."""
    n = x.shape[0]
    for i in range(n):
        s = diag[i] * x[i]
        for p in range(indptr[i], indptr[i + 1]):
            s += data[p] * x[indices[p]]
        out[i] = s
