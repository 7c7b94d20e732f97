"""MAXSAT front-end.

Each clause j becomes a signed vector s_j over the variables plus a "truth"
index 0 carrying sign -1, so z_j = V s_j measures how far the clause's
literals sit from the truth direction v_0. The relaxation minimizes
<C, V^T V> with C = sum_j w_j s_j s_j^T (diagonal dropped), where
w_j = weight_j / (4 L_j) and L_j is the clause's literal count.

The solver never materializes C: it keeps every z_j current and updates one
variable at a time in O(k * clauses containing it).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .core import (
    AUTO,
    RNG_NAME,
    FactorMatrix,
    InputError,
    OptionError,
    ParseError,
    SolveOptions,
    SolveResult,
    SparseCost,
    cost_from_arrays,
    default_rank,
    random_init,
    rounding_directions,
)
from .mixing import STOPPING_RULE, SweepReport, run_sweeps

REFRESH_EVERY = 100
DEFAULT_TRIALS = 100


@dataclass
class Formula:
    n_vars: int
    clauses: list[tuple[float, tuple[int, ...]]]
    top: float | None = None
    tautologies_dropped: int = 0
    empty_dropped: int = 0

    def __post_init__(self):
        for j, (w, lits) in enumerate(self.clauses):
            if not w > 0:
                raise InputError(f"clause {j}: weight must be positive, got {w}")
            if not lits:
                raise InputError(f"clause {j}: empty clause")
            for lit in lits:
                if lit == 0 or abs(lit) > self.n_vars:
                    raise InputError(f"clause {j}: literal {lit} out of range 1..{self.n_vars}")
        self._csr = None

    @property
    def n_clauses(self) -> int:
        return len(self.clauses)

    @property
    def total_weight(self) -> float:
        return float(sum(w for w, _ in self.clauses))

    def is_hard(self, j: int) -> bool:
        return self.top is not None and self.clauses[j][0] >= self.top

    def _arrays(self):
        if self._csr is None:
            lens = np.array([len(l) for _, l in self.clauses], dtype=np.int64)
            ptr = np.zeros(len(lens) + 1, dtype=np.int64)
            np.cumsum(lens, out=ptr[1:])
            lits = np.array([x for _, l in self.clauses for x in l], dtype=np.int64)
            weight = np.array([w for w, _ in self.clauses], dtype=np.float64)
            hard = np.array([self.is_hard(j) for j in range(self.n_clauses)], dtype=bool)
            self._csr = (ptr, np.abs(lits) - 1, lits > 0, weight, hard)
        return self._csr

    def satisfied(self, values) -> np.ndarray:
        """Per-clause satisfaction mask for a boolean assignment of length n_vars."""
        values = np.asarray(values, dtype=bool)
        if values.shape != (self.n_vars,):
            raise InputError(f"assignment must have length {self.n_vars}")
        ptr, var, pos, _, _ = self._arrays()
        if not self.clauses:
            return np.zeros(0, dtype=bool)
        lit_true = values[var] == pos
        return np.logical_or.reduceat(lit_true, ptr[:-1])

    def satisfied_weight(self, values) -> float:
        return float(self._arrays()[3] @ self.satisfied(values)) if self.clauses else 0.0

    def hard_violations(self, values) -> int:
        if not self.clauses:
            return 0
        return int(np.sum(self._arrays()[4] & ~self.satisfied(values)))


def parse_dimacs(text: str) -> Formula:
    """Parse DIMACS ``p cnf n m`` or ``p wcnf n m [top]``.

    Clauses are read as a token stream terminated by 0, so a clause may span
    lines. Repeated literals are merged; clauses containing x and -x are
    dropped and counted, as are empty clauses. A line starting with ``%``
    ends the input (SATLIB convention).
    """
    fmt = None
    n_vars = n_decl = 0
    top = None
    clauses: list[tuple[float, tuple[int, ...]]] = []
    read = taut = empty = 0
    cur: list[int] = []
    cur_w = None
    cur_line = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line[0] == "c":
            continue
        if line[0] == "%":
            break
        if line[0] == "p":
            parts = line.split()
            if fmt is not None:
                raise ParseError("duplicate problem line", lineno)
            if len(parts) < 4 or parts[1] not in ("cnf", "wcnf"):
                raise ParseError(f"unrecognized problem line {line!r}", lineno)
            fmt = parts[1]
            try:
                n_vars, n_decl = int(parts[2]), int(parts[3])
                if fmt == "wcnf" and len(parts) == 5:
                    top = float(parts[4])
                elif len(parts) != 4:
                    raise ValueError
            except ValueError:
                raise ParseError(f"bad problem line {line!r}", lineno) from None
            if n_vars < 0 or n_decl < 0:
                raise ParseError(f"bad problem line {line!r}", lineno)
            continue
        if fmt is None:
            raise ParseError("clause before problem line", lineno)
        for tok in line.split():
            if cur_w is None and fmt == "wcnf" and not cur:
                try:
                    cur_w = float(tok)
                except ValueError:
                    raise ParseError(f"clause {read}: bad weight {tok!r}", lineno) from None
                if not (cur_w > 0 and math.isfinite(cur_w)):
                    raise ParseError(f"clause {read}: weight must be positive, got {tok}", lineno)
                cur_line = lineno
                continue
            try:
                lit = int(tok)
            except ValueError:
                raise ParseError(f"clause {read}: bad literal {tok!r}", lineno) from None
            if cur_line is None:
                cur_line = lineno
            if lit == 0:
                lits = tuple(dict.fromkeys(cur))
                w = 1.0 if fmt == "cnf" else cur_w
                if not lits:
                    empty += 1
                elif any(-x in lits for x in lits):
                    taut += 1
                else:
                    clauses.append((w, lits))
                read += 1
                cur, cur_w, cur_line = [], None, None
                continue
            if abs(lit) > n_vars:
                raise ParseError(f"clause {read}: literal {lit} out of range 1..{n_vars}", lineno)
            cur.append(lit)
    if fmt is None:
        raise ParseError("missing problem line 'p cnf|wcnf n m'")
    if cur or cur_w is not None:
        raise ParseError(f"clause {read}: missing terminating 0", cur_line)
    if read != n_decl:
        raise ParseError(f"problem line declares {n_decl} clauses, found {read}")
    return Formula(n_vars, clauses, top=top, tautologies_dropped=taut, empty_dropped=empty)


class ClauseSystem:
    """Signed clause/variable incidence with the truth column at index 0.

    Clause-major arrays (``cptr``, ``cidx``, ``csign``) list every clause's
    entries with the truth entry first; variable-major arrays (``vptr``,
    ``vclause``, ``vsign``) describe the same incidence from the other side.
    """

    def __init__(self, f: Formula):
        if not f.clauses:
            raise InputError("formula has no clauses")
        self.n_vars = f.n_vars
        self.n = f.n_vars + 1
        m = f.n_clauses
        self.m = m
        self.weight = np.array([w for w, _ in f.clauses], dtype=np.float64)
        self.clen = np.array([len(l) for _, l in f.clauses], dtype=np.float64)
        self.cw = self.weight / (4.0 * self.clen)

        lens = self.clen.astype(np.int64) + 1
        self.cptr = np.zeros(m + 1, dtype=np.int64)
        np.cumsum(lens, out=self.cptr[1:])
        cidx, csign = [], []
        for _, lits in f.clauses:
            cidx.append(0)
            csign.append(-1.0)
            cidx.extend(abs(x) for x in lits)
            csign.extend(1.0 if x > 0 else -1.0 for x in lits)
        self.cidx = np.array(cidx, dtype=np.int64)
        self.csign = np.array(csign, dtype=np.float64)

        clause_of = np.repeat(np.arange(m, dtype=np.int64), lens)
        order = np.lexsort((clause_of, self.cidx))
        self.vclause = clause_of[order]
        self.vsign = self.csign[order]
        self.vptr = np.zeros(self.n + 1, dtype=np.int64)
        np.cumsum(np.bincount(self.cidx, minlength=self.n), out=self.vptr[1:])

        # bound = offset - <C, V^T V>
        L = self.clen
        self.offset = float(self.weight.sum() + np.sum(self.cw * (L * L - 3.0 * L)))

    def clause_entries(self, j: int) -> list[tuple[int, int]]:
        a, b = self.cptr[j], self.cptr[j + 1]
        return list(zip(self.cidx[a:b].tolist(), self.csign[a:b].astype(int).tolist()))

    def incidence(self, i: int) -> list[tuple[int, int]]:
        a, b = self.vptr[i], self.vptr[i + 1]
        return list(zip(self.vclause[a:b].tolist(), self.vsign[a:b].astype(int).tolist()))

    def row_norm_bound(self) -> np.ndarray:
        """Per-column upper bound on |c_i|_1: sum over incident clauses of w_j L_j."""
        out = np.zeros(self.n)
        np.add.at(out, self.cidx, np.repeat(self.cw * self.clen, self.clen.astype(np.int64) + 1))
        return out

    def materialize(self) -> SparseCost:
        """Explicit C = sum_j w_j s_j s_j^T with zero diagonal. Quadratic in clause length."""
        ii, jj, ww = [], [], []
        for j in range(self.m):
            a, b = self.cptr[j], self.cptr[j + 1]
            idx, sg = self.cidx[a:b], self.csign[a:b]
            p, q = np.triu_indices(b - a, 1)
            ii.append(idx[p])
            jj.append(idx[q])
            ww.append(self.cw[j] * sg[p] * sg[q])
        return cost_from_arrays(self.n, np.concatenate(ii), np.concatenate(jj), np.concatenate(ww))


class MaxsatState:
    """Factor over n_vars + 1 columns plus the running clause vectors z_j = V s_j."""

    def __init__(self, cs: ClauseSystem, V: FactorMatrix):
        if V.n != cs.n:
            raise InputError(f"factor has {V.n} columns, clause system needs {cs.n}")
        self.cs = cs
        self.V = V
        self.Z = np.zeros((cs.m, V.k))
        self.sweeps_since_refresh = 0
        self.y_scratch = np.zeros(cs.n)
        self.degenerate = np.zeros(cs.n, dtype=np.bool_)
        self.g_scratch = np.zeros(V.k)
        self.refresh()

    def refresh(self):
        _kernels.clause_vectors(self.cs.cptr, self.cs.cidx, self.cs.csign, self.V.cols, self.Z)
        self.sweeps_since_refresh = 0

    def objective(self) -> float:
        return float(_kernels.clause_objective(self.Z, self.cs.cw, self.cs.clen))

    def drift(self) -> float:
        """Largest deviation of the running z_j from a fresh recomputation."""
        Z = np.empty_like(self.Z)
        _kernels.clause_vectors(self.cs.cptr, self.cs.cidx, self.cs.csign, self.V.cols, Z)
        return float(np.abs(Z - self.Z).max()) if self.cs.m else 0.0


def maxsat_sweep(cs: ClauseSystem, state: MaxsatState, delta: float = 1e-12, theta: float | None = None) -> SweepReport:
    """One pass over variables 1..n_vars; the truth column is never touched.

    With ``theta`` set, uses the step-size update v_i := normalize(v_i - theta g_i).
    """
    if state.V.n != cs.n or state.Z.shape[0] != cs.m:
        raise InputError("state does not match clause system")
    f_before = state.objective()
    rhs, hits = _kernels.maxsat_sweep(
        cs.vptr, cs.vclause, cs.vsign, cs.cw, state.V.cols, state.Z,
        0.0 if theta is None else float(theta), delta,
        state.y_scratch, state.degenerate, state.g_scratch,
    )
    state.sweeps_since_refresh += 1
    if state.sweeps_since_refresh >= REFRESH_EVERY:
        state.refresh()
    f_after = state.objective()
    return SweepReport(f_before, f_after, f_before - f_after, rhs, int(hits))


def sat_upper_bound(cs: ClauseSystem, state: MaxsatState) -> float:
    """sum_j weight_j * (1 - (|z_j|^2 - (L_j - 1)^2) / (4 L_j))."""
    zz = np.einsum("jk,jk->j", state.Z, state.Z)
    L = cs.clen
    return float(np.sum(cs.weight * (1.0 - (zz - (L - 1.0) ** 2) / (4.0 * L))))


def clause_dual_vector(cs: ClauseSystem, V: FactorMatrix, Z: np.ndarray) -> np.ndarray:
    """y_i = |V c_i| for the implicit clause cost, computed from z without forming C."""
    rowvar = np.repeat(np.arange(cs.n), np.diff(cs.vptr))
    a = cs.cw[cs.vclause]
    contrib = (a * cs.vsign)[:, None] * Z[cs.vclause] - a[:, None] * V.cols[rowvar]
    P = np.zeros_like(V.cols)
    np.add.at(P, rowvar, contrib)
    return np.linalg.norm(P, axis=1)


def safe_theta(cs: ClauseSystem) -> float:
    return 0.99 / float(cs.row_norm_bound().max())


def solve_maxsat(cs: ClauseSystem, opts: SolveOptions | None = None, V0: FactorMatrix | None = None) -> SolveResult:
    """Run the incremental solver. Column 0 (truth) stays at its initial value."""
    opts = opts or SolveOptions()
    k = default_rank(cs.n) if opts.rank == AUTO else int(opts.rank)
    V = random_init(cs.n, k, opts.seed) if V0 is None else V0.copy()
    theta = None
    if opts.step_size == AUTO:
        theta = safe_theta(cs)
    elif opts.step_size is not None:
        theta = float(opts.step_size)
        if theta * float(cs.row_norm_bound().max()) >= 1:
            raise OptionError(f"step size {theta} too large; must stay below {1 / cs.row_norm_bound().max():g}")
    state = MaxsatState(cs, V)
    f0 = state.objective()
    f, sweeps, converged, trace = run_sweeps(
        lambda: maxsat_sweep(cs, state, opts.degeneracy_delta, theta), f0, opts
    )
    state.refresh()
    return SolveResult(
        V=V,
        f=state.objective(),
        y=clause_dual_vector(cs, V, state.Z),
        sweeps_used=sweeps,
        converged=converged,
        degenerate_columns=np.flatnonzero(state.degenerate).tolist(),
        trace=trace,
        metadata={
            "rng": RNG_NAME,
            "seed": int(opts.seed),
            "rank": k,
            "mode": "plain" if theta is None else "step",
            "theta": theta,
            "tol_rel": opts.tol_rel,
            "f0": f0,
            "stopping_rule": STOPPING_RULE,
            "offset": cs.offset,
        },
    )


@dataclass
class BoolAssignment:
    values: np.ndarray
    satisfied_weight: float
    hard_violations: int = 0


def round_assignment(f: Formula, state: MaxsatState, r) -> BoolAssignment:
    """x_i = true iff sign(r . v_i) == sign(r . v_0), with sign(0) = +1."""
    r = np.asarray(r, dtype=np.float64)
    if r.shape != (state.V.k,):
        raise InputError(f"rounding direction must have length k={state.V.k}")
    side = state.V.cols @ r >= 0.0
    values = side[1:] == side[0]
    return BoolAssignment(values, f.satisfied_weight(values), f.hard_violations(values))


def best_rounding(f: Formula, state: MaxsatState, trials: int = DEFAULT_TRIALS, seed: int = 0) -> BoolAssignment:
    """Best of the deterministic r = v_0 rounding and ``trials`` random directions."""
    if trials < 1:
        raise InputError("trials must be >= 1")
    best = round_assignment(f, state, state.V.cols[0])
    for r in rounding_directions(state.V.k, trials, seed):
        cand = round_assignment(f, state, r)
        if cand.satisfied_weight > best.satisfied_weight:
            best = cand
    return best
