"""Shared data model: sparse symmetric costs, unit-sphere factors, options, results."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import _kernels

RNG_NAME = "numpy.random.PCG64"
AUTO = "auto"


class InputError(ValueError):
    """Bad user-supplied data (indices, weights, dimensions)."""


class ParseError(InputError):
    def __init__(self, message, lineno=None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)


class OptionError(ValueError):
    """Invalid solver or CLI option."""


def make_rng(seed) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def rounding_directions(k: int, trials: int, seed: int) -> list[np.ndarray]:
    """Unit directions, trial t drawn from its own PCG64 substream of ``seed``.

    Substreams come from ``SeedSequence(seed).spawn``, so direction t does not
    depend on how many trials are requested or in what order they run.
    """
    out = []
    for child in np.random.SeedSequence(seed).spawn(trials):
        rng = np.random.Generator(np.random.PCG64(child))
        r = rng.standard_normal(k)
        while not r.any():
            r = rng.standard_normal(k)
        out.append(r / np.linalg.norm(r))
    return out


class SparseCost:
    """Symmetric cost matrix with zero diagonal, stored row by row (CSR).

    Each row holds strictly increasing column indices; symmetry means row i
    doubles as column i, which is all the sweeps need.
    """

    def __init__(self, n, indptr, indices, data, dropped_diagonal=0):
        self.n = int(n)
        self.indptr = np.ascontiguousarray(indptr, dtype=np.int64)
        self.indices = np.ascontiguousarray(indices, dtype=np.int64)
        self.data = np.ascontiguousarray(data, dtype=np.float64)
        self.dropped_diagonal = int(dropped_diagonal)
        rows = np.repeat(np.arange(self.n), np.diff(self.indptr))
        self.row_norms1 = np.bincount(rows, weights=np.abs(self.data), minlength=self.n).astype(np.float64)
        for a in (self.indptr, self.indices, self.data, self.row_norms1):
            a.setflags(write=False)

    @property
    def nnz(self) -> int:
        return int(self.indices.shape[0])

    @property
    def rows(self) -> list[list[tuple[int, float]]]:
        return [
            list(zip(self.indices[a:b].tolist(), self.data[a:b].tolist()))
            for a, b in zip(self.indptr[:-1], self.indptr[1:])
        ]

    def row(self, i):
        a, b = self.indptr[i], self.indptr[i + 1]
        return self.indices[a:b], self.data[a:b]

    def triples(self) -> list[tuple[int, int, float]]:
        """Upper-triangle (i, j, w) triples, i < j, 0-indexed."""
        out = []
        for i in range(self.n):
            cols, vals = self.row(i)
            out.extend((i, int(j), float(w)) for j, w in zip(cols, vals) if j > i)
        return out

    def dense(self) -> np.ndarray:
        M = np.zeros((self.n, self.n))
        rowidx = np.repeat(np.arange(self.n), np.diff(self.indptr))
        M[rowidx, self.indices] = self.data
        return M

    def max_row_norm1(self) -> float:
        return float(self.row_norms1.max()) if self.n else 0.0

    def __eq__(self, other):
        if not isinstance(other, SparseCost):
            return NotImplemented
        return (
            self.n == other.n
            and np.array_equal(self.indptr, other.indptr)
            and np.array_equal(self.indices, other.indices)
            and np.array_equal(self.data, other.data)
        )

    def __repr__(self):
        return f"SparseCost(n={self.n}, nnz={self.nnz})"


def build_cost(n: int, entries: Iterable[Sequence]) -> SparseCost:
    """Build a symmetric zero-diagonal cost from (i, j, w) triples.

    Every triple contributes w to the unordered pair {i, j}; repeated pairs are
    summed in either orientation. Diagonal triples are dropped and counted in
    ``dropped_diagonal``. Pairs that sum to exactly zero are not stored.
    """
    n = int(n)
    if n < 1:
        raise InputError(f"n must be positive, got {n}")
    arr = [tuple(e) for e in entries]
    if arr:
        ij = np.array([(e[0], e[1]) for e in arr], dtype=np.int64)
        w = np.array([e[2] for e in arr], dtype=np.float64)
    else:
        ij = np.zeros((0, 2), dtype=np.int64)
        w = np.zeros(0)
    return cost_from_arrays(n, ij[:, 0], ij[:, 1], w)


def cost_from_arrays(n, i, j, w) -> SparseCost:
    i = np.asarray(i, dtype=np.int64)
    j = np.asarray(j, dtype=np.int64)
    w = np.asarray(w, dtype=np.float64)
    bad = (i < 0) | (i >= n) | (j < 0) | (j >= n)
    if bad.any():
        p = int(np.flatnonzero(bad)[0])
        raise InputError(f"entry {p}: index ({i[p]}, {j[p]}) out of range for n={n}")
    if not np.all(np.isfinite(w)):
        p = int(np.flatnonzero(~np.isfinite(w))[0])
        raise InputError(f"entry {p}: non-finite weight {w[p]}")
    diag = i == j
    dropped = int(diag.sum())
    i, j, w = i[~diag], j[~diag], w[~diag]
    lo, hi = np.minimum(i, j), np.maximum(i, j)
    key = lo * n + hi
    uniq, inv = np.unique(key, return_inverse=True)
    summed = np.zeros(uniq.shape[0])
    np.add.at(summed, inv, w)
    keep = summed != 0.0
    uniq, summed = uniq[keep], summed[keep]
    lo, hi = uniq // n, uniq % n
    rows = np.concatenate([lo, hi])
    cols = np.concatenate([hi, lo])
    vals = np.concatenate([summed, summed])
    order = np.lexsort((cols, rows))
    rows, cols, vals = rows[order], cols[order], vals[order]
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(rows, minlength=n), out=indptr[1:])
    return SparseCost(n, indptr, cols, vals, dropped_diagonal=dropped)


def from_dense(M) -> SparseCost:
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise InputError("dense cost must be square")
    if not np.allclose(M, M.T, rtol=0, atol=0):
        raise InputError("dense cost must be symmetric")
    i, j = np.nonzero(np.triu(M, 1))
    return cost_from_arrays(M.shape[0], i, j, M[i, j])


def parse_cost(text: str) -> SparseCost:
    """Parse the plain-text cost format: ``n nnz`` header, then 1-indexed ``i j w`` lines."""
    header = None
    ii, jj, ww = [], [], []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line[0] in "#%":
            continue
        parts = line.split()
        if header is None:
            if len(parts) != 2:
                raise ParseError("expected header 'n nnz'", lineno)
            try:
                header = (int(parts[0]), int(parts[1]))
            except ValueError:
                raise ParseError(f"bad header {line!r}", lineno) from None
            if header[0] < 1 or header[1] < 0:
                raise ParseError(f"bad header {line!r}", lineno)
            continue
        if len(parts) != 3:
            raise ParseError(f"expected 'i j w', got {line!r}", lineno)
        try:
            i, j, w = int(parts[0]), int(parts[1]), float(parts[2])
        except ValueError:
            raise ParseError(f"bad entry {line!r}", lineno) from None
        n = header[0]
        if not (1 <= i <= n and 1 <= j <= n):
            raise ParseError(f"index out of range 1..{n}: {line!r}", lineno)
        if not math.isfinite(w):
            raise ParseError(f"non-finite weight: {line!r}", lineno)
        ii.append(i - 1)
        jj.append(j - 1)
        ww.append(w)
    if header is None:
        raise ParseError("missing header 'n nnz'")
    if len(ii) != header[1]:
        raise ParseError(f"header declares {header[1]} entries, found {len(ii)}")
    return cost_from_arrays(header[0], ii, jj, ww)


def format_cost(C: SparseCost) -> str:
    t = C.triples()
    lines = [f"{C.n} {len(t)}"]
    lines.extend(f"{i + 1} {j + 1} {w!r}" for i, j, w in t)
    return "\n".join(lines) + "\n"


class FactorMatrix:
    """k x n factor V with unit-norm columns.

    Columns are stored contiguously as rows of ``cols`` (shape n x k) because
    every update touches one column at a time. ``matrix`` is the k x n view.
    """

    def __init__(self, cols):
        cols = np.array(cols, dtype=np.float64, order="C")
        if cols.ndim != 2:
            raise InputError("factor columns must be a 2-D array (n x k)")
        self.cols = cols

    @classmethod
    def from_matrix(cls, V) -> "FactorMatrix":
        return cls(np.asarray(V, dtype=np.float64).T)

    @property
    def n(self) -> int:
        return self.cols.shape[0]

    @property
    def k(self) -> int:
        return self.cols.shape[1]

    @property
    def matrix(self) -> np.ndarray:
        return self.cols.T

    def column(self, i) -> np.ndarray:
        return self.cols[i]

    def norms(self) -> np.ndarray:
        return np.linalg.norm(self.cols, axis=1)

    def copy(self) -> "FactorMatrix":
        return FactorMatrix(self.cols.copy())

    def __repr__(self):
        return f"FactorMatrix(k={self.k}, n={self.n})"


def objective(C: SparseCost, V: FactorMatrix) -> float:
    """<C, V^T V>, counting each undirected pair twice."""
    if V.n != C.n:
        raise InputError(f"factor has {V.n} columns, cost has n={C.n}")
    return float(_kernels.objective(C.indptr, C.indices, C.data, V.cols))


def default_rank(n: int) -> int:
    """Smallest safe rank: ceil(sqrt(2n)) + 1, capped at n."""
    if n < 1:
        raise InputError("n must be positive")
    return min(n, math.isqrt(2 * n - 1) + 1 + 1)


def random_init(n: int, k: int, seed: int) -> FactorMatrix:
    """Columns are normalized standard Gaussian draws from PCG64(seed)."""
    if n < 1 or k < 1:
        raise InputError("n and k must be positive")
    rng = make_rng(seed)
    cols = rng.standard_normal((n, k))
    norms = np.linalg.norm(cols, axis=1)
    while np.any(norms == 0.0):  # measure-zero, but keep the guarantee
        z = norms == 0.0
        cols[z] = rng.standard_normal((int(z.sum()), k))
        norms = np.linalg.norm(cols, axis=1)
    cols /= norms[:, None]
    return FactorMatrix(cols)


@dataclass
class SolveOptions:
    rank: int | str = AUTO
    tol_rel: float = 1e-4
    max_sweeps: int = 10000
    step_size: float | str | None = None
    seed: int = 0
    degeneracy_delta: float = 1e-12
    trace_every: int = 1

    def __post_init__(self):
        if isinstance(self.rank, str):
            if self.rank != AUTO:
                raise OptionError(f"rank must be a positive integer or 'auto', got {self.rank!r}")
        elif int(self.rank) < 1:
            raise OptionError(f"rank must be positive, got {self.rank}")
        if not self.tol_rel > 0:
            raise OptionError(f"tol_rel must be > 0, got {self.tol_rel}")
        if int(self.max_sweeps) < 1:
            raise OptionError(f"max_sweeps must be positive, got {self.max_sweeps}")
        if isinstance(self.step_size, str):
            if self.step_size != AUTO:
                raise OptionError(f"step_size must be a number, 'auto' or None, got {self.step_size!r}")
        elif self.step_size is not None and not (math.isfinite(self.step_size) and self.step_size > 0):
            raise OptionError(f"step_size must be > 0, got {self.step_size}")
        if not self.degeneracy_delta > 0:
            raise OptionError("degeneracy_delta must be > 0")
        if int(self.trace_every) < 1:
            raise OptionError("trace_every must be positive")
        if not 0 <= int(self.seed) < 2**64:
            raise OptionError("seed must fit in 64 unsigned bits")

    def resolved_rank(self, n: int) -> int:
        return default_rank(n) if self.rank == AUTO else int(self.rank)


@dataclass
class TraceRecord:
    sweep: int
    f: float
    decrease: float
    elapsed: float


@dataclass
class SolveResult:
    V: FactorMatrix
    f: float
    y: np.ndarray
    sweeps_used: int
    converged: bool
    degenerate_columns: list[int]
    trace: list[TraceRecord]
    metadata: dict = field(default_factory=dict)
