"""The Mixing method: cyclic closed-form column updates on the unit sphere.

Two update rules share the same Gauss-Seidel structure (column i sees the
already-updated columns j < i):

* plain:  v_i := -g_i / |g_i|
* step:   v_i := (v_i - theta g_i) / |v_i - theta g_i|

with g_i = sum_j c_ij v_j. Each sweep reports both sides of its exact
objective-decrease identity so callers can audit the iteration.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import _kernels
from .core import (
    AUTO,
    RNG_NAME,
    FactorMatrix,
    InputError,
    OptionError,
    SolveOptions,
    SolveResult,
    SparseCost,
    TraceRecord,
    objective,
    random_init,
)

STOPPING_RULE = "f_prev - f_cur <= tol_rel * (f0 - f_cur); absolute tol_rel when f0 == f_cur"


@dataclass
class SweepReport:
    f_before: float
    f_after: float
    identity_lhs: float
    identity_rhs: float
    degenerate_hits: int = 0

    @property
    def identity_error(self) -> float:
        return abs(self.identity_lhs - self.identity_rhs)


class MixingState:
    """Mutable iterate plus the scratch vectors the sweep writes into."""

    def __init__(self, V: FactorMatrix, order=None):
        self.V = V
        self.g_scratch = np.zeros(V.k)
        self.y_scratch = np.zeros(V.n)
        self.degenerate = np.zeros(V.n, dtype=np.bool_)
        self.order = (
            np.arange(V.n, dtype=np.int64) if order is None else np.ascontiguousarray(order, dtype=np.int64)
        )
        if self.order.size and (self.order.min() < 0 or self.order.max() >= V.n):
            raise InputError("sweep order contains an out-of-range column")


def _check(C: SparseCost, state: MixingState):
    if state.V.n != C.n:
        raise InputError(f"factor has {state.V.n} columns, cost has n={C.n}")


def sweep(C: SparseCost, state: MixingState, delta: float = 1e-12) -> SweepReport:
    """Plain Mixing sweep; columns with |g_i| < delta are left in place and counted."""
    _check(C, state)
    f_before = objective(C, state.V)
    rhs, hits = _kernels.sweep_plain(
        C.indptr, C.indices, C.data, state.V.cols, state.order, delta,
        state.y_scratch, state.degenerate, state.g_scratch,
    )
    f_after = objective(C, state.V)
    return SweepReport(f_before, f_after, f_before - f_after, rhs, int(hits))


def _check_theta(C: SparseCost, theta: float):
    m = C.max_row_norm1()
    if not (theta > 0 and (m == 0 or theta * m < 1)):
        raise InputError(f"theta must lie in (0, 1/max_i|c_i|_1) = (0, {1 / m if m else math.inf:g}), got {theta}")


def sweep_step(C: SparseCost, state: MixingState, theta: float) -> SweepReport:
    """Step-size sweep. Never degenerates: |v_i - theta g_i| >= 1 - theta |c_i|_1 > 0."""
    _check(C, state)
    _check_theta(C, theta)
    f_before = objective(C, state.V)
    rhs = _kernels.sweep_step(
        C.indptr, C.indices, C.data, state.V.cols, state.order, theta,
        state.y_scratch, state.g_scratch,
    )
    f_after = objective(C, state.V)
    return SweepReport(f_before, f_after, f_before - f_after, rhs, 0)


def safe_theta(C: SparseCost) -> float:
    m = C.max_row_norm1()
    if m == 0:
        raise InputError("cost matrix is all zero; every feasible V is optimal")
    return 0.99 / m


def dual_normalizers(C: SparseCost, V: FactorMatrix) -> np.ndarray:
    """y_i = |V c_i|."""
    P = np.empty_like(V.cols)
    _kernels.row_products(C.indptr, C.indices, C.data, V.cols, P)
    return np.linalg.norm(P, axis=1)


def fixed_point_residual(C: SparseCost, V: FactorMatrix) -> float:
    """Frobenius norm of V (C + diag(y)) with y_i = |V c_i|."""
    if V.n != C.n:
        raise InputError(f"factor has {V.n} columns, cost has n={C.n}")
    P = np.empty_like(V.cols)
    _kernels.row_products(C.indptr, C.indices, C.data, V.cols, P)
    y = np.linalg.norm(P, axis=1)
    R = P + y[:, None] * V.cols
    return float(np.linalg.norm(R))


def stop_now(f0: float, f_prev: float, f_cur: float, tol_rel: float) -> bool:
    dec = f_prev - f_cur
    progress = f0 - f_cur
    if progress == 0.0:
        return dec <= tol_rel
    return dec <= tol_rel * progress


def run_sweeps(
    step: Callable[[], SweepReport],
    f0: float,
    opts: SolveOptions,
    on_record: Callable[[TraceRecord], None] | None = None,
):
    """Drive ``step`` until the stopping rule fires or max_sweeps is hit.

    Returns (f_final, sweeps_used, converged, trace). ``on_record`` is called
    with every trace record as it is taken.
    """
    t0 = time.perf_counter()
    trace: list[TraceRecord] = []
    f_prev = f0
    converged = False
    sweeps = 0
    max_sweeps = int(opts.max_sweeps)
    every = int(opts.trace_every)
    for sweeps in range(1, max_sweeps + 1):
        rep = step()
        f_cur = rep.f_after
        done = stop_now(f0, f_prev, f_cur, opts.tol_rel)
        if sweeps % every == 0 or done or sweeps == max_sweeps:
            rec = TraceRecord(sweeps, f_cur, f_prev - f_cur, time.perf_counter() - t0)
            trace.append(rec)
            if on_record is not None:
                on_record(rec)
        f_prev = f_cur
        if done:
            converged = True
            break
    return f_prev, sweeps, converged, trace


def solve(C: SparseCost, opts: SolveOptions | None = None, V0: FactorMatrix | None = None) -> SolveResult:
    """Run the Mixing method from a seeded random start (or ``V0``)."""
    opts = opts or SolveOptions()
    k = opts.resolved_rank(C.n)
    if V0 is None:
        V = random_init(C.n, k, opts.seed)
    else:
        if V0.n != C.n:
            raise InputError(f"initial factor has {V0.n} columns, cost has n={C.n}")
        V = V0.copy()
        k = V.k
    theta = None
    if opts.step_size == AUTO:
        theta = safe_theta(C)
    elif opts.step_size is not None:
        theta = float(opts.step_size)
        try:
            _check_theta(C, theta)
        except InputError as e:
            raise OptionError(str(e)) from None

    state = MixingState(V)
    f0 = objective(C, V)
    if theta is None:
        step = lambda: sweep(C, state, opts.degeneracy_delta)  # noqa: E731
    else:
        step = lambda: sweep_step(C, state, theta)  # noqa: E731

    f, sweeps, converged, trace = run_sweeps(step, f0, opts)
    y = dual_normalizers(C, V)
    return SolveResult(
        V=V,
        f=objective(C, V),
        y=y,
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
        },
    )
