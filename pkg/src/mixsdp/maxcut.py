"""MAXCUT front-end: graph ingestion, SDP cut bound, hyperplane rounding."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import FactorMatrix, InputError, ParseError, SparseCost, cost_from_arrays, rounding_directions

DEFAULT_TRIALS = 100


class Graph:
    """Undirected weighted graph, edges stored once with u < v (0-indexed)."""

    def __init__(self, n, src, dst, weight, dropped_self_loops=0):
        self.n = int(n)
        self.src = np.asarray(src, dtype=np.int64)
        self.dst = np.asarray(dst, dtype=np.int64)
        self.weight = np.asarray(weight, dtype=np.float64)
        self.dropped_self_loops = int(dropped_self_loops)

    @classmethod
    def from_edges(cls, n, edges) -> "Graph":
        """Normalize arbitrary (u, v[, w]) edges: orient u < v, sum duplicates, drop loops."""
        edges = [tuple(e) for e in edges]
        u = np.array([e[0] for e in edges], dtype=np.int64)
        v = np.array([e[1] for e in edges], dtype=np.int64)
        w = np.array([e[2] if len(e) > 2 else 1.0 for e in edges], dtype=np.float64)
        return _normalize(int(n), u, v, w)

    @property
    def m(self) -> int:
        return int(self.src.shape[0])

    @property
    def edges(self) -> list[tuple[int, int, float]]:
        return list(zip(self.src.tolist(), self.dst.tolist(), self.weight.tolist()))

    @property
    def total_weight(self) -> float:
        return float(self.weight.sum())

    @property
    def abs_weight(self) -> float:
        return float(np.abs(self.weight).sum())

    @property
    def has_negative_weights(self) -> bool:
        return bool((self.weight < 0).any())

    def cut_value(self, signs) -> float:
        signs = np.asarray(signs)
        return float(self.weight @ (signs[self.src] != signs[self.dst]))

    def __repr__(self):
        return f"Graph(n={self.n}, m={self.m}, W={self.total_weight:g})"


def _normalize(n, u, v, w) -> Graph:
    if n < 1:
        raise InputError("graph needs at least one vertex")
    if len(u) and (min(u.min(), v.min()) < 0 or max(u.max(), v.max()) >= n):
        raise InputError(f"edge endpoint out of range for n={n}")
    if not np.all(np.isfinite(w)):
        raise InputError("non-finite edge weight")
    loops = u == v
    u, v, w = u[~loops], v[~loops], w[~loops]
    lo, hi = np.minimum(u, v), np.maximum(u, v)
    key, inv = np.unique(lo * n + hi, return_inverse=True)
    summed = np.zeros(key.shape[0])
    np.add.at(summed, inv, w)
    return Graph(n, key // n, key % n, summed, dropped_self_loops=int(loops.sum()))


def parse_graph(text: str) -> Graph:
    """Parse a Gset/rudy-style file: ``n m`` header, then ``u v [w]`` lines, 1-indexed.

    Lines starting with ``#``, ``%`` or ``c`` are comments. Duplicate edges are
    summed and self-loops dropped (see ``Graph.dropped_self_loops``).
    """
    header = None
    us, vs, ws = [], [], []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line[0] in "#%c":
            continue
        parts = line.split()
        if header is None:
            try:
                if len(parts) != 2:
                    raise ValueError
                header = (int(parts[0]), int(parts[1]))
            except ValueError:
                raise ParseError(f"expected header 'n m', got {line!r}", lineno) from None
            if header[0] < 1 or header[1] < 0:
                raise ParseError(f"bad header {line!r}", lineno)
            continue
        if len(parts) not in (2, 3):
            raise ParseError(f"expected 'u v [w]', got {line!r}", lineno)
        try:
            a, b = int(parts[0]), int(parts[1])
            w = float(parts[2]) if len(parts) == 3 else 1.0
        except ValueError:
            raise ParseError(f"malformed edge {line!r}", lineno) from None
        if not (1 <= a <= header[0] and 1 <= b <= header[0]):
            raise ParseError(f"vertex index out of range 1..{header[0]}: {line!r}", lineno)
        if not np.isfinite(w):
            raise ParseError(f"non-finite weight: {line!r}", lineno)
        us.append(a - 1)
        vs.append(b - 1)
        ws.append(w)
    if header is None:
        raise ParseError("missing header 'n m'")
    if len(us) != header[1]:
        raise ParseError(f"header declares {header[1]} edges, found {len(us)}")
    return _normalize(header[0], np.array(us, np.int64), np.array(vs, np.int64), np.array(ws, float))


def format_graph(g: Graph) -> str:
    lines = [f"{g.n} {g.m}"]
    lines.extend(f"{u + 1} {v + 1} {w!r}" for u, v, w in g.edges)
    return "\n".join(lines) + "\n"


def graph_to_cost(g: Graph) -> SparseCost:
    return cost_from_arrays(g.n, g.src, g.dst, g.weight)


def sdp_cut_bound(g: Graph, f: float) -> float:
    """W/2 - f/4: the relaxed cut value of a factor with objective f."""
    return g.total_weight / 2.0 - f / 4.0


@dataclass
class CutAssignment:
    signs: np.ndarray
    value: float


def _signs(V: FactorMatrix, r) -> np.ndarray:
    r = np.asarray(r, dtype=np.float64)
    if r.shape != (V.k,):
        raise InputError(f"rounding direction must have length k={V.k}")
    return np.where(V.cols @ r >= 0.0, 1, -1).astype(np.int8)


def round_cut(g: Graph, V: FactorMatrix, r) -> CutAssignment:
    """signs_i = sign(r . v_i), with sign(0) = +1."""
    if V.n != g.n:
        raise InputError(f"factor has {V.n} columns, graph has n={g.n}")
    s = _signs(V, r)
    return CutAssignment(s, g.cut_value(s))


def best_rounding(g: Graph, V: FactorMatrix, trials: int = DEFAULT_TRIALS, seed: int = 0) -> CutAssignment:
    if trials < 1:
        raise InputError("trials must be >= 1")
    best = None
    for r in rounding_directions(V.k, trials, seed):
        cand = round_cut(g, V, r)
        if best is None or cand.value > best.value:
            best = cand
    return best
