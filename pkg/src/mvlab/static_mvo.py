"""Closed-form static mean-variance optimisation with an independent KKT oracle.

The problem: minimise (1/2) w' Sigma w subject to 1'w = 1 and w'mu = target,
with short selling allowed.  The closed form is expressed through the
frontier constants

    a = 1' Sigma^-1 1,   b = 1' Sigma^-1 mu,   c = mu' Sigma^-1 mu,

and the KKT oracle solves the full (N+2)x(N+2) stationarity system with a
generic dense solver, independently of the closed form.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from .errors import DefinitenessError, SingularFrontierError

Array = NDArray[np.float64]

_SYM_TOL = 1e-12
_PIVOT_REL_TOL = 1e-12
_FRONTIER_TOL = 1e-12


def _as_vector(x) -> Array:
    v = np.atleast_1d(np.asarray(x, dtype=np.float64))
    if v.ndim != 1:
        raise ValueError("expected a 1-d vector")
    return v


def robust_cholesky(sigma: Array) -> Array:
    """Lower Cholesky factor with an explicit pivot check.

    Rejects the matrix if any pivot falls below 1e-12 times the largest
    diagonal entry, naming the failing pivot index.
    """
    sigma = np.asarray(sigma, dtype=np.float64)
    n = sigma.shape[0]
    floor = _PIVOT_REL_TOL * max(np.max(np.diag(sigma)), 0.0)
    L = np.zeros_like(sigma)
    for j in range(n):
        pivot = sigma[j, j] - L[j, :j] @ L[j, :j]
        if pivot <= floor:
            raise DefinitenessError(
                f"covariance not positive definite: pivot {j} = {pivot:.3e} "
                f"(floor {floor:.3e})"
            )
        L[j, j] = np.sqrt(pivot)
        if j + 1 < n:
            L[j + 1:, j] = (sigma[j + 1:, j] - L[j + 1:, :j] @ L[j, :j]) / L[j, j]
    return L


def _chol_solve(L: Array, rhs: Array) -> Array:
    from scipy.linalg import solve_triangular

    y = solve_triangular(L, rhs, lower=True)
    return solve_triangular(L.T, y, lower=False)


@dataclass(frozen=True)
class StaticProblem:
    """A single-period mean-variance instance.

    mu and target are annualised returns, sigma is the annualised covariance.
    """

    mu: Array
    sigma: Array
    target: float

    def __post_init__(self):
        mu = _as_vector(self.mu)
        sigma = np.asarray(self.sigma, dtype=np.float64)
        if sigma.ndim == 0:
            sigma = sigma.reshape(1, 1)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "target", float(self.target))
        n = mu.size
        if n < 1:
            raise ValueError("need at least one asset")
        if sigma.shape != (n, n):
            raise ValueError(f"sigma must be {n}x{n}, got {sigma.shape}")
        if not np.all(np.isfinite(mu)):
            raise ValueError("mu must be finite")
        asym = np.max(np.abs(sigma - sigma.T)) if n > 1 else 0.0
        if asym > _SYM_TOL:
            raise ValueError(f"sigma not symmetric: max |S_ij - S_ji| = {asym:.3e}")
        # Positive definiteness is enforced eagerly so every instance is usable.
        robust_cholesky(sigma)

    @property
    def n_assets(self) -> int:
        return self.mu.size


@dataclass(frozen=True)
class FrontierConstants:
    a: float
    b: float
    c: float

    @property
    def discriminant(self) -> float:
        """a*c - b^2; strictly positive away from degenerate frontiers."""
        return self.a * self.c - self.b * self.b


@dataclass(frozen=True)
class Weights:
    omega: Array
    lambda1: float
    lambda2: float

    def __post_init__(self):
        object.__setattr__(self, "omega", _as_vector(self.omega))


def frontier_constants(p: StaticProblem) -> FrontierConstants:
    """Quadratic forms of Sigma^-1 against the ones vector and mu."""
    L = robust_cholesky(p.sigma)
    ones = np.ones(p.n_assets)
    inv_ones = _chol_solve(L, ones)
    inv_mu = _chol_solve(L, p.mu)
    return FrontierConstants(
        a=float(ones @ inv_ones),
        b=float(ones @ inv_mu),
        c=float(p.mu @ inv_mu),
    )


def _frontier_tol(fc: FrontierConstants) -> float:
    return _FRONTIER_TOL * max(1.0, abs(fc.a * fc.c))


def solve_static_mvo(p: StaticProblem) -> Weights:
    """Closed-form minimum-variance weights hitting the target return.

    omega = ((c - b*m)/(ac - b^2)) Sigma^-1 1 + ((a*m - b)/(ac - b^2)) Sigma^-1 mu
    with m the target; the Lagrange multipliers are the two scalar prefactors.
    """
    fc = frontier_constants(p)
    if p.n_assets == 1:
        # Degenerate single-asset frontier: omega = 1 is the only feasible point.
        if abs(p.mu[0] - p.target) > 1e-10 * max(1.0, abs(p.mu[0])):
            raise SingularFrontierError(
                f"single asset cannot reach target {p.target} (mu = {p.mu[0]})"
            )
        return Weights(omega=np.array([1.0]), lambda1=float(p.sigma[0, 0]), lambda2=0.0)
    disc = fc.discriminant
    if disc <= _frontier_tol(fc):
        raise SingularFrontierError(
            f"degenerate frontier: a*c - b^2 = {disc:.3e}"
        )
    L = robust_cholesky(p.sigma)
    ones = np.ones(p.n_assets)
    lam1 = (fc.c - fc.b * p.target) / disc
    lam2 = (fc.a * p.target - fc.b) / disc
    omega = lam1 * _chol_solve(L, ones) + lam2 * _chol_solve(L, p.mu)
    return Weights(omega=omega, lambda1=float(lam1), lambda2=float(lam2))


def frontier_variance(fc: FrontierConstants, target: float) -> float:
    """Minimal portfolio variance achievable at the given target return."""
    disc = fc.discriminant
    if disc <= _frontier_tol(fc):
        raise SingularFrontierError(f"degenerate frontier: a*c - b^2 = {disc:.3e}")
    return (fc.a * target * target - 2.0 * fc.b * target + fc.c) / disc


def kkt_oracle(p: StaticProblem) -> Weights:
    """Solve the full KKT stationarity system with a generic dense solver.

    Independent of the closed form: assembles
        [Sigma, -1, -mu; 1', 0, 0; mu', 0, 0] (w, l1, l2) = (0, 1, target)
    and hands it to LAPACK.
    """
    n = p.n_assets
    ones = np.ones(n)
    K = np.zeros((n + 2, n + 2))
    K[:n, :n] = p.sigma
    K[:n, n] = -ones
    K[:n, n + 1] = -p.mu
    K[n, :n] = ones
    K[n + 1, :n] = p.mu
    rhs = np.zeros(n + 2)
    rhs[n] = 1.0
    rhs[n + 1] = p.target
    if np.linalg.cond(K) > 1e14:
        raise SingularFrontierError("KKT matrix is singular or near-singular")
    try:
        sol = np.linalg.solve(K, rhs)
    except np.linalg.LinAlgError as exc:
        raise SingularFrontierError("KKT matrix is singular") from exc
    return Weights(omega=sol[:n], lambda1=float(sol[n]), lambda2=float(sol[n + 1]))
