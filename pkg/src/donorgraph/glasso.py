"""Graphical lasso by block-coordinate descent.

Maximises ``log det(Theta) - tr(S Theta) - lam * ||Theta||_1`` over
positive-definite ``Theta``. Each outer sweep visits the columns in
ascending order and solves the column's lasso sub-problem by cyclic
coordinate descent on the working covariance ``W`` (Friedman, Hastie and
Tibshirani, 2008). A zero pattern is imposed by freezing the excluded
regression coefficients at zero, which also turns ``lam = 0`` into the
usual covariance-selection MLE for a given graph.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
from numba import njit
from scipy import linalg

from .graphs import Graph
from .panel import invert_covariance

logger = logging.getLogger(__name__)


class GlassoError(RuntimeError):
    """The solver could not produce a valid precision matrix."""


class ConvergenceError(GlassoError):
    def __init__(self, message, residual):
        super().__init__(message)
        self.residual = residual


@dataclass(frozen=True)
class SolverSettings:
    """Knobs for :func:`glasso_solve`.

    ``tol`` bounds the mean absolute change of the off-diagonal working
    covariance over one sweep, relative to the mean ``|S|`` off-diagonal.
    """

    tol: float = 1e-6
    max_iter: int = 200
    penalize_diagonal: bool = True

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")


@dataclass(frozen=True, eq=False)
class PrecisionMatrix:
    theta: np.ndarray
    lambda_used: float
    pattern: Optional[Graph] = None
    n_iter: int = 0
    residual: float = 0.0

    @property
    def p(self) -> int:
        return self.theta.shape[0]

    def covariance(self) -> np.ndarray:
        c = linalg.cho_factor(self.theta, lower=True)
        w = linalg.cho_solve(c, np.eye(self.p))
        return (w + w.T) / 2


@njit(cache=True, nogil=True)
def _bcd(S, lam, allowed, W, B, tol, max_iter, inner_tol, inner_max):
    p = S.shape[0]
    g = np.zeros(p)
    change = np.inf
    it = 0
    converged = False
    scale = 0.0
    for i in range(p):
        for j in range(p):
            if i != j:
                scale += abs(S[i, j])
    scale /= p * p - p
    if scale <= 0.0:
        for i in range(p):
            scale += S[i, i]
        scale /= p

    for it in range(1, max_iter + 1):
        total = 0.0
        for j in range(p):
            for i in range(p):
                g[i] = 0.0
            for k in range(p):
                b = B[k, j]
                if k != j and b != 0.0:
                    for i in range(p):
                        g[i] += W[i, k] * b
            for _ in range(inner_max):
                dmax = 0.0
                for k in range(p):
                    if k == j or not allowed[k, j]:
                        continue
                    old = B[k, j]
                    r = S[k, j] - (g[k] - W[k, k] * old)
                    if r > lam:
                        new = (r - lam) / W[k, k]
                    elif r < -lam:
                        new = (r + lam) / W[k, k]
                    else:
                        new = 0.0
                    d = new - old
                    if d != 0.0:
                        for i in range(p):
                            g[i] += W[i, k] * d
                        B[k, j] = new
                        ad = abs(d) * W[k, k]
                        if ad > dmax:
                            dmax = ad
                if dmax < inner_tol:
                    break
            for i in range(p):
                if i != j:
                    total += 2.0 * abs(g[i] - W[i, j])
                    W[i, j] = g[i]
                    W[j, i] = g[i]
        change = total / (p * p - p)
        if change < tol * scale:
            converged = True
            break

    theta = np.zeros((p, p))
    for j in range(p):
        acc = W[j, j]
        for k in range(p):
            if k != j:
                acc -= W[k, j] * B[k, j]
        tjj = 1.0 / acc
        theta[j, j] = tjj
        for k in range(p):
            if k != j:
                theta[k, j] = -B[k, j] * tjj
    return theta, it, change / scale, converged


def _check_input(s, lam):
    s = np.asarray(s, dtype=float)
    if s.ndim != 2 or s.shape[0] != s.shape[1]:
        raise ValueError("covariance must be square")
    if not np.allclose(s, s.T, atol=1e-10, rtol=0):
        raise ValueError("covariance must be symmetric")
    if np.any(np.diag(s) <= 0):
        raise ValueError("covariance diagonal must be positive")
    if not lam >= 0:
        raise ValueError("penalty must be non-negative")
    return (s + s.T) / 2


def glasso_objective(theta, s, lam, penalize_diagonal: bool = True) -> float:
    """``log det(Theta) - tr(S Theta) - lam * ||Theta||_1``; -inf if not PD."""
    theta = np.asarray(getattr(theta, "theta", theta), dtype=float)
    sign, logdet = np.linalg.slogdet(theta)
    if sign <= 0:
        return -np.inf
    l1 = np.abs(theta).sum()
    if not penalize_diagonal:
        l1 -= np.abs(np.diag(theta)).sum()
    return float(logdet - np.sum(s * theta) - lam * l1)


def _solve(s, lam, allowed, settings, init, pattern):
    p = s.shape[0]
    diag_pen = lam if settings.penalize_diagonal else 0.0
    if p == 1:
        return PrecisionMatrix(np.array([[1.0 / (s[0, 0] + diag_pen)]]), lam, pattern)

    if init is not None:
        t0 = np.asarray(getattr(init, "theta", init), dtype=float)
        W = linalg.inv(t0)
        W = (W + W.T) / 2
        B = -t0 / np.diag(t0)[None, :]
        np.fill_diagonal(B, 0.0)
        B = np.where(allowed, B, 0.0)
    else:
        W = s.copy()
        B = np.zeros((p, p))
    W[np.diag_indices(p)] = np.diag(s) + diag_pen

    inner_tol = settings.tol * 1e-3
    theta, n_iter, residual, converged = _bcd(
        s, float(lam), allowed, W, B, settings.tol, settings.max_iter, inner_tol, 10_000
    )
    if not converged:
        raise ConvergenceError(
            f"glasso did not converge in {settings.max_iter} sweeps "
            f"(relative change {residual:.3g})",
            residual,
        )
    # the column-wise estimates agree to solver tolerance; zeros stay exact
    theta = (theta + theta.T) / 2
    theta[~allowed & ~np.eye(p, dtype=bool)] = 0.0
    theta += 0.0  # -0.0 -> +0.0
    try:
        linalg.cholesky(theta, lower=True)
    except linalg.LinAlgError as exc:
        raise GlassoError("solution is not positive definite (infeasible pattern?)") from exc
    return PrecisionMatrix(theta, float(lam), pattern, n_iter, residual)


def glasso_solve(
    s,
    lam: float,
    settings: SolverSettings = SolverSettings(),
    init=None,
) -> PrecisionMatrix:
    """Sparse precision estimate for covariance ``s`` at penalty ``lam``.

    With ``lam == 0`` the result is the plain inverse of ``s`` (which must
    then be positive definite). ``init`` optionally warm-starts the solver
    from a previous precision estimate.
    """
    s = _check_input(s, lam)
    if lam == 0:
        try:
            return PrecisionMatrix(invert_covariance(s), 0.0)
        except linalg.LinAlgError as exc:
            raise GlassoError(f"lam=0 requires a positive-definite covariance: {exc}") from exc
    allowed = np.ones(s.shape, dtype=np.bool_)
    return _solve(s, lam, allowed, settings, init, None)


def glasso_solve_constrained(
    s,
    lam: float,
    g: Graph,
    settings: SolverSettings = SolverSettings(),
    init=None,
) -> PrecisionMatrix:
    """As :func:`glasso_solve`, with ``theta_ij = 0`` wherever ``g`` has no edge."""
    s = _check_input(s, lam)
    if g.p != s.shape[0]:
        raise ValueError(f"graph has {g.p} vertices, covariance is {s.shape[0]}x{s.shape[0]}")
    if g.n_edges == g.max_edges:
        res = glasso_solve(s, lam, settings, init)
        return PrecisionMatrix(res.theta, res.lambda_used, g, res.n_iter, res.residual)
    allowed = g.adjacency()
    return _solve(s, lam, allowed, settings, init, g)
