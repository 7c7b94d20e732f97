"""Instance generators and dense reference implementations shared by the tests.

The reference routines here are deliberately naive (dense matrices, Python
loops) so they stay independent of the compiled kernels they check.
"""

import itertools

import numpy as np

from mixsdp.maxcut import Graph
from mixsdp.maxsat import Formula

ACCEPTANCE_LINES = []


def record(criterion, passed, detail=""):
    ACCEPTANCE_LINES.append(f"[{'PASS' if passed else 'FAIL'}] criterion {criterion}: {detail}")


def random_graph(n, p, rng, weights="unit", connected=True) -> Graph:
    while True:
        A = np.triu(rng.random((n, n)) < p, 1)
        deg = (A | A.T).sum(axis=1)
        if not connected or (deg > 0).all():
            break
    u, v = np.nonzero(A)
    if weights == "unit":
        w = np.ones(len(u))
    else:
        w = rng.uniform(0.5, 2.0, size=len(u))
    return Graph.from_edges(n, list(zip(u.tolist(), v.tolist(), w.tolist())))


def complete_graph(n) -> Graph:
    return Graph.from_edges(n, [(i, j, 1.0) for i, j in itertools.combinations(range(n), 2)])


def random_ksat(n, m, rng, k=3, weighted=False) -> Formula:
    clauses = []
    for _ in range(m):
        vs = rng.choice(n, size=k, replace=False) + 1
        signs = rng.choice([-1, 1], size=k)
        w = float(rng.integers(1, 5)) if weighted else 1.0
        clauses.append((w, tuple(int(s * v) for s, v in zip(signs, vs))))
    return Formula(n, clauses)


def random_clauses(n, m, rng, max_len=4) -> Formula:
    clauses = []
    for _ in range(m):
        L = int(rng.integers(1, max_len + 1))
        vs = rng.choice(n, size=min(L, n), replace=False) + 1
        signs = rng.choice([-1, 1], size=len(vs))
        clauses.append((float(rng.integers(1, 4)), tuple(int(s * v) for s, v in zip(signs, vs))))
    return Formula(n, clauses)


def dense_objective(M, cols):
    Vm = np.asarray(cols).T
    return float(np.trace(M @ Vm.T @ Vm))


def ref_sweep(M, cols, delta=1e-12, theta=None, order=None):
    """Dense Gauss-Seidel sweep written straight from the update rule.

    Returns (new columns, identity rhs, degenerate count).
    """
    V = np.array(cols, dtype=float, copy=True)
    n = V.shape[0]
    rhs = 0.0
    hits = 0
    for i in range(n) if order is None else order:
        g = sum(M[i, j] * V[j] for j in range(n) if j != i)
        g = np.asarray(g, dtype=float) * np.ones(V.shape[1])
        if theta is None:
            y = np.linalg.norm(g)
            if y < delta:
                hits += 1
                continue
            new = -g / y
            rhs += y * np.sum((V[i] - new) ** 2)
        else:
            u = V[i] - theta * g
            y = np.linalg.norm(u)
            new = u / y
            rhs += (1 + y) / theta * np.sum((V[i] - new) ** 2)
        V[i] = new
    return V, rhs, hits


def dense_clause_cost(f: Formula):
    """C = sum_j weight_j/(4 L_j) s_j s_j^T with zeroed diagonal, index 0 = truth."""
    n = f.n_vars + 1
    M = np.zeros((n, n))
    for w, lits in f.clauses:
        s = np.zeros(n)
        s[0] = -1
        for x in lits:
            s[abs(x)] = 1 if x > 0 else -1
        M += w / (4 * len(lits)) * np.outer(s, s)
    np.fill_diagonal(M, 0.0)
    return M


def brute_maxcut_loops(n, edges):
    """Second brute force: iterate sign tuples, vertex 0 fixed, pure Python."""
    best = -np.inf
    for rest in itertools.product((1, -1), repeat=n - 1):
        s = (1,) + rest
        best = max(best, sum(w for u, v, w in edges if s[u] != s[v]))
    return best


def brute_maxsat_loops(f: Formula):
    """Second brute force with reversed loop order (clauses outer) and itertools."""
    best = -np.inf
    for vals in itertools.product((False, True), repeat=f.n_vars):
        total = 0.0
        for w, lits in f.clauses:
            if any(vals[abs(x) - 1] == (x > 0) for x in lits):
                total += w
        best = max(best, total)
    return best
