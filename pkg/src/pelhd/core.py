"""Penalized empirical likelihood (PEL) ratio statistic for a mean vector.

The statistic of a hypothesized mean ``mu`` is

    K_n(mu) = min over the open simplex of
              -sum_i log(n pi_i) + lambda * sum_j delta_j M_j(pi)^2,

with ``M_j(pi) = sum_i pi_i (X_ij - mu_j)`` and per-column weights
``delta_j = 1/s_j^2`` (divisor-n sample variance; constant columns get
``delta_j = 0`` and drop out of the penalty).  The penalty level defaults
to ``lambda = c_star * n / p``.  The objective is strictly convex with a
built-in log barrier, so the minimizer is unique and interior; we find it
with an equality-constrained damped Newton method on the (n+1)-dimensional
KKT system, falling back to a damped fixed-point sweep on the stationarity
equations if Newton stalls.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceError, DimensionError, DomainError

__all__ = [
    "DataMatrix",
    "PelConfig",
    "PelSolution",
    "compute_column_stats",
    "objective",
    "solve_pel",
    "neg_log_pel_ratio",
]


@dataclass(frozen=True)
class DataMatrix:
    """An n x p observation matrix with per-column summaries.

    ``col_var`` uses divisor n (not n-1).  ``delta[j]`` is the inverse
    column variance, or 0 for a constant column.
    """

    values: np.ndarray
    col_mean: np.ndarray
    col_var: np.ndarray
    delta: np.ndarray

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class PelConfig:
    """Penalty level and solver knobs.

    ``lam`` is the penalty factor; when ``None`` it is resolved per data
    set as ``c_star * n / p``.  Tolerances follow the statistic's use in
    log-scale comparisons: the KKT residual (max-norm of the gradient
    projected onto the simplex tangent space) must drop below
    ``newton_tol``.
    """

    c_star: float = 1.0
    lam: float | None = None
    newton_tol: float = 1e-10
    max_newton_iters: int = 100
    max_fixed_point_iters: int = 10_000

    def __post_init__(self):
        if not self.c_star > 0:
            raise DomainError(f"c_star must be positive, got {self.c_star}")
        if self.lam is not None and self.lam < 0:
            raise DomainError(f"lam must be >= 0, got {self.lam}")
        if self.newton_tol <= 0:
            raise DomainError("newton_tol must be positive")
        if self.max_newton_iters < 1 or self.max_fixed_point_iters < 1:
            raise DomainError("iteration budgets must be positive")

    def penalty(self, n: int, p: int) -> float:
        """The penalty factor lambda_n for an n x p data set."""
        if self.lam is not None:
            return self.lam
        return self.c_star * n / p


@dataclass(frozen=True)
class PelSolution:
    """Optimal simplex weights and the statistic K_n = -log R_n(mu)."""

    pi: np.ndarray
    stat: float
    m_vec: np.ndarray
    iterations: int
    converged: bool
    kkt_residual: float


def compute_column_stats(values) -> DataMatrix:
    """Build a DataMatrix: column means, divisor-n variances, delta weights.

    Raises DimensionError for fewer than 2 rows.
    """
    x = np.array(values, dtype=float)
    if x.ndim != 2:
        raise DimensionError(f"expected a 2-d array, got ndim={x.ndim}")
    n, p = x.shape
    if n < 2:
        raise DimensionError(f"need at least 2 rows, got {n}")
    if p < 1:
        raise DimensionError("need at least 1 column")
    mean = x.mean(axis=0)
    var = np.mean((x - mean) ** 2, axis=0)
    delta = np.zeros(p)
    pos = var > 0
    delta[pos] = 1.0 / var[pos]
    for arr in (x, mean, var, delta):
        arr.setflags(write=False)
    return DataMatrix(values=x, col_mean=mean, col_var=var, delta=delta)


def objective(pi, data: DataMatrix, mu, cfg: PelConfig) -> float:
    """Evaluate -sum log(n pi_i) + lambda sum_j delta_j M_j^2 at ``pi``.

    ``pi`` must be strictly positive (DomainError otherwise); the caller
    is responsible for sum(pi) == 1.
    """
    pi = np.asarray(pi, dtype=float)
    if np.any(pi <= 0):
        raise DomainError("all simplex weights must be strictly positive")
    n = data.n
    lam = cfg.penalty(n, data.p)
    m = (data.values - np.asarray(mu, dtype=float)).T @ pi
    return float(-np.sum(np.log(n * pi)) + lam * np.dot(data.delta, m**2))


def _kkt_residual(pi, ytil, lam) -> float:
    """Max-norm of the objective gradient projected onto {x : sum x = 0}."""
    g = -1.0 / pi + 2.0 * lam * (ytil @ (ytil.T @ pi))
    g -= g.mean()
    return float(np.max(np.abs(g)))


def _newton(pi, ytil, lam, n, tol, max_iters):
    """Feasible-start Newton on the equality-constrained problem.

    Returns (pi, iterations, converged, residual).  The Hessian is the
    dense n x n matrix diag(1/pi^2) + 2 lambda Ytil Ytil'; each step solves
    the bordered KKT system of size n+1 and backtracks to keep pi > 0.
    """
    b = 2.0 * lam * (ytil @ ytil.T)
    kkt = np.zeros((n + 1, n + 1))
    kkt[n, :n] = 1.0
    kkt[:n, n] = 1.0
    rhs = np.zeros(n + 1)
    idx = np.arange(n)

    def fval(x):
        m = ytil.T @ x
        return -np.sum(np.log(n * x)) + lam * (m @ m)

    residual = np.inf
    for it in range(max_iters):
        g = -1.0 / pi + b @ pi
        residual = float(np.max(np.abs(g - g.mean())))
        if residual < tol:
            return pi, it, True, residual
        kkt[:n, :n] = b
        kkt[idx, idx] += 1.0 / pi**2
        rhs[:n] = -g
        try:
            sol = np.linalg.solve(kkt, rhs)
        except np.linalg.LinAlgError:
            return pi, it, False, residual
        d = sol[:n]
        slope = float(g @ d)
        if not np.isfinite(slope):
            return pi, it, False, residual
        # rounding can leave a marginally positive directional derivative
        # near the optimum; fall back to a plain-decrease condition there
        armijo_slope = min(slope, 0.0)
        neg = d < 0
        t = 1.0 if not np.any(neg) else min(1.0, 0.99 * np.min(pi[neg] / -d[neg]))
        f0 = fval(pi)
        while t > 1e-14:
            trial = pi + t * d
            if np.all(trial > 0) and fval(trial) <= f0 + 1e-4 * t * armijo_slope:
                break
            t *= 0.5
        else:
            return pi, it, False, residual
        pi = pi + t * d
        pi = pi / pi.sum()
    g = -1.0 / pi + b @ pi
    residual = float(np.max(np.abs(g - g.mean())))
    return pi, max_iters, residual < tol, residual


def _fixed_point(pi, ytil, lam, n, tol, max_iters):
    """Damped sweep of the stationarity equations.

    Each weight is updated to 1/[n(1 + 2 gamma sum_j delta_j M_j Y_kj
    - 2 gamma sum_j delta_j M_j^2)], gamma = lambda/n, then averaged with
    the previous iterate (weight 0.5, shrunk geometrically whenever the
    KKT residual rises, so 2-cycles near the boundary get damped out) and
    renormalized to the simplex.  Linear rate, but robust far from the
    optimum.
    """
    gamma = lam / n
    weight = 0.5
    residual = _kkt_residual(pi, ytil, lam)
    for it in range(max_iters):
        m = ytil.T @ pi
        cross = ytil @ m
        denom = 1.0 + 2.0 * gamma * cross - 2.0 * gamma * (m @ m)
        # at any stationary point denom_k = 1/(n pi_k) > 1/n, so this floor
        # only tames transients and never excludes a solution
        np.maximum(denom, 0.5 / n, out=denom)
        proposal = 1.0 / (n * denom)
        pi = (1.0 - weight) * pi + weight * proposal
        pi = pi / pi.sum()
        new_residual = _kkt_residual(pi, ytil, lam)
        if new_residual < tol:
            return pi, it + 1, True, new_residual
        if new_residual > residual:
            weight = max(weight * 0.5, 1e-4)
        else:
            weight = min(weight * 1.2, 0.5)
        residual = new_residual
    return pi, max_iters, False, residual


def solve_pel(data: DataMatrix, mu, cfg: PelConfig) -> PelSolution:
    """Minimize the PEL criterion over the open simplex.

    Parameters
    ----------
    data : DataMatrix
        Observations with precomputed column stats.
    mu : array_like, shape (p,)
        Hypothesized mean.
    cfg : PelConfig
        Penalty and solver settings.

    Returns
    -------
    PelSolution
        Unique minimizer (strict convexity), the statistic, and solver
        diagnostics.  Raises ConvergenceError if both Newton and the
        fixed-point fallback exhaust their budgets.
    """
    mu = np.asarray(mu, dtype=float)
    n, p = data.n, data.p
    if mu.shape != (p,):
        raise DimensionError(f"mu must have shape ({p},), got {mu.shape}")
    lam = cfg.penalty(n, p)

    uniform = np.full(n, 1.0 / n)
    if lam == 0 or not np.any(data.delta > 0):
        # Penalty vanishes identically; the barrier alone is minimized at 1/n.
        return PelSolution(
            pi=uniform, stat=0.0, m_vec=(data.values - mu).T @ uniform,
            iterations=0, converged=True, kkt_residual=0.0,
        )

    y = data.values - mu
    ytil = y * np.sqrt(data.delta)

    pi, iters, ok, res = _newton(
        uniform.copy(), ytil, lam, n, cfg.newton_tol, cfg.max_newton_iters
    )
    if not ok:
        pi, extra, ok, res = _fixed_point(
            pi, ytil, lam, n, cfg.newton_tol, cfg.max_fixed_point_iters
        )
        iters += extra
    if not ok:
        raise ConvergenceError(
            f"PEL solver did not reach tol={cfg.newton_tol:g} "
            f"(residual {res:.3e} after {iters} iterations)",
            best_pi=pi, residual=res,
        )

    m_vec = y.T @ pi
    stat = float(-np.sum(np.log(n * pi)) + lam * np.dot(data.delta, m_vec**2))
    if -1e-9 < stat < 0:
        stat = 0.0
    return PelSolution(
        pi=pi, stat=stat, m_vec=m_vec, iterations=iters,
        converged=True, kkt_residual=res,
    )


def neg_log_pel_ratio(data: DataMatrix, mu, cfg: PelConfig) -> float:
    """The statistic K_n(mu) = -log R_n(mu); nonnegative, zero at the mean."""
    return solve_pel(data, mu, cfg).stat
