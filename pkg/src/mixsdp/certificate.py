"""Dual certificates: a computable upper bound on f(V) - f*.

With y_i = |V c_i| and S = C + diag(y), shifting y by max(0, -lambda_min(S))
gives a dual-feasible point, so

    f* >= -sum(y) - n * max(0, -lambda_min(S))

holds for any feasible V. At a critical V with S PSD the bound is tight.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .core import FactorMatrix, InputError, SparseCost, make_rng, objective
from .mixing import dual_normalizers, fixed_point_residual


@dataclass
class Certificate:
    y: np.ndarray
    dual_value: float
    primal_value: float
    raw_gap: float
    lambda_min_estimate: float
    lambda_tol: float
    certified_gap_bound: float
    fixed_point_residual: float

    def summary(self) -> dict:
        return {
            "dual_value": self.dual_value,
            "primal_value": self.primal_value,
            "raw_gap": self.raw_gap,
            "lambda_min": self.lambda_min_estimate,
            "lambda_tol": self.lambda_tol,
            "certified_gap_bound": self.certified_gap_bound,
            "fixed_point_residual": self.fixed_point_residual,
        }


def dual_vector(C: SparseCost, V: FactorMatrix) -> np.ndarray:
    if V.n != C.n:
        raise InputError(f"factor has {V.n} columns, cost has n={C.n}")
    return dual_normalizers(C, V)


def min_eigenvalue(
    C: SparseCost,
    y,
    tol: float = 1e-9,
    max_iters: int = 20_000,
    seed: int = 0,
    method: str = "lanczos",
):
    """Estimate lambda_min(C + diag(y)).

    Returns ``(estimate, achieved_tol)``. The estimate is a Rayleigh quotient,
    so it never falls below lambda_min; achieved_tol is the residual norm
    |S u - rho u| of the returned vector. Running out of ``max_iters``
    matrix-vector products is not an error: the residual just stays above
    ``tol``.

    ``method="lanczos"`` (default) runs restarted Lanczos with full
    reorthogonalization. ``method="power"`` runs power iteration on
    sigma*I - S with the Gershgorin shift sigma = max_i (y_i + |c_i|_1); it is
    simpler but stalls when the bottom of the spectrum is clustered.
    """
    if not tol > 0:
        raise InputError("tol must be positive")
    y = np.ascontiguousarray(y, dtype=np.float64)
    if y.shape != (C.n,):
        raise InputError(f"y must have length {C.n}")
    sigma = float(np.max(y + C.row_norms1))
    lo = float(np.min(y - C.row_norms1))
    if sigma == lo:
        # Gershgorin discs collapse to a point: S = sigma * I
        return sigma, 0.0
    x = make_rng(seed).standard_normal(C.n)
    x /= np.linalg.norm(x)
    if method == "power":
        rho, res, _ = _kernels.power_shifted(
            C.indptr, C.indices, C.data, y, sigma, x, int(max_iters), float(tol), 10
        )
        return float(rho), float(res)
    if method != "lanczos":
        raise InputError(f"unknown eigenvalue method {method!r}")
    return _lanczos_min(C, y, x, tol, int(max_iters), scale=max(abs(sigma), abs(lo)))


def _lanczos_min(C: SparseCost, y, x, tol, max_iters, scale, basis=64):
    n = C.n
    m = min(n, basis)
    Sx = np.empty(n)
    best = (np.inf, np.inf)
    used = 0
    while True:
        Q = np.zeros((m + 1, n))
        alpha = np.zeros(m)
        beta = np.zeros(m)
        Q[0] = x
        steps = 0
        for j in range(m):
            _kernels.shifted_matvec(C.indptr, C.indices, C.data, y, Q[j], Sx)
            used += 1
            w = Sx.copy()
            alpha[j] = Q[j] @ w
            # two passes of classical Gram-Schmidt against the whole basis
            for _ in range(2):
                w -= Q[: j + 1].T @ (Q[: j + 1] @ w)
            beta[j] = np.linalg.norm(w)
            steps = j + 1
            if beta[j] <= 1e-14 * scale or used >= max_iters:
                break
            Q[j + 1] = w / beta[j]
        T = np.diag(alpha[:steps]) + np.diag(beta[: steps - 1], 1) + np.diag(beta[: steps - 1], -1)
        evals, evecs = np.linalg.eigh(T)
        s = evecs[:, 0]
        u = Q[:steps].T @ s
        u /= np.linalg.norm(u)
        # explicit residual is cheap and immune to loss of orthogonality
        _kernels.shifted_matvec(C.indptr, C.indices, C.data, y, u, Sx)
        used += 1
        rho = float(u @ Sx)
        res = float(np.linalg.norm(Sx - rho * u))
        if res < best[1]:
            best = (rho, res)
        if res <= tol or used >= max_iters or beta[steps - 1] <= 1e-14 * scale:
            return best
        x = u


def certify(
    C: SparseCost,
    V: FactorMatrix,
    tol: float = 1e-9,
    max_iters: int = 20_000,
    seed: int = 0,
    method: str = "lanczos",
) -> Certificate:
    y = dual_vector(C, V)
    f = objective(C, V)
    lam, lam_tol = min_eigenvalue(C, y, tol=tol, max_iters=max_iters, seed=seed, method=method)
    raw_gap = f + float(y.sum())
    repair = C.n * max(0.0, -lam + lam_tol)
    return Certificate(
        y=y,
        dual_value=-float(y.sum()),
        primal_value=f,
        raw_gap=raw_gap,
        lambda_min_estimate=lam,
        lambda_tol=lam_tol,
        certified_gap_bound=raw_gap + repair,
        fixed_point_residual=fixed_point_residual(C, V),
    )
