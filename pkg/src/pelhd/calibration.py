"""Subsampling calibration of the PEL statistic and dependence estimators.

The null distribution of the statistic (raw in the non-ergodic regime,
centered at c_star and scaled by p^(alpha_hat ^ 1/2) in the ergodic one) is
estimated from its values on all n-m+1 overlapping index blocks of size m.
The module also provides the subsample-size rules, two estimators of the
correlation-decay exponent alpha, and two estimators of the limiting
Normal variance kappa^2.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .core import DataMatrix, PelConfig, compute_column_stats, solve_pel
from .errors import (
    ConvergenceError,
    DegenerateDataError,
    DimensionError,
    DomainError,
    NumericError,
)

__all__ = [
    "SubsamplingPlan",
    "CalibrationCurve",
    "TestReport",
    "subsample_size",
    "build_curve_ne",
    "build_curve_ergodic",
    "quantile",
    "estimate_alpha_invariant",
    "estimate_alpha_hurst",
    "estimate_kappa_sq_invariant",
    "estimate_kappa_sq_plugin",
    "decide",
    "conservative_reject",
]

logger = logging.getLogger(__name__)

# Fraction of failed block solves at which the whole curve is rejected.
MAX_BLOCK_FAILURE_RATE = 0.01


@dataclass(frozen=True)
class SubsamplingPlan:
    """Subsample size m and the n-m+1 overlapping blocks {i, ..., i+m-1}."""

    n: int
    m: int
    regime: str
    c_star: float
    b_hat: float = 1.0

    def __post_init__(self):
        if not 1 < self.m < self.n:
            raise DomainError(f"need 1 < m < n, got m={self.m}, n={self.n}")
        if self.regime not in ("ne", "ergodic"):
            raise DomainError(f"unknown regime {self.regime!r}")
        if self.b_hat <= 0:
            raise DomainError("b_hat must be positive")

    @property
    def blocks(self) -> list[range]:
        return [range(i, i + self.m) for i in range(self.n - self.m + 1)]


@dataclass(frozen=True)
class CalibrationCurve:
    """Sorted subsample statistics approximating the null law.

    ``block_stats`` keeps the per-block values in block order (the exported
    CSV layout); ``sorted_values`` is the same multiset ascending.
    """

    sorted_values: np.ndarray
    regime: str
    block_starts: np.ndarray
    block_stats: np.ndarray
    n_failed: int = 0

    def __len__(self) -> int:
        return self.sorted_values.size


@dataclass(frozen=True)
class TestReport:
    """Outcome of one calibrated test, with provenance."""

    statistic: float
    threshold: float
    rejected: bool
    regime: str = ""
    alpha_hat: float = math.nan
    m: int = 0
    seed_used: int = 0


def subsample_size(n: int, p: int, alpha0: float = 0.5, c0: float = 1.0,
                   rule: str = "ergodic") -> int:
    """Subsample size m for the overlapping-block calibration.

    rule="ergodic": m = round(c0 * max((n p)^(a/(1+a)), n^(1/3))) with
    a = min(alpha0, 1/2); a = 1/2 reduces to the short-range choice
    c0 * (n p)^(1/3).  rule="ne-cuberoot" / "ne-sqrt": m = round(c0 * n^(1/3))
    or round(c0 * sqrt(n)).  The result is clamped to [2, n-1].
    """
    if n < 2 or p < 2:
        raise DimensionError("need n, p >= 2")
    if c0 <= 0:
        raise DomainError("c0 must be positive")
    if rule == "ergodic":
        if not alpha0 > 0:
            raise DomainError(f"alpha0 must be positive, got {alpha0}")
        a = min(alpha0, 0.5)
        m = c0 * max((n * p) ** (a / (1.0 + a)), n ** (1.0 / 3.0))
    elif rule == "ne-cuberoot":
        m = c0 * n ** (1.0 / 3.0)
    elif rule == "ne-sqrt":
        m = c0 * math.sqrt(n)
    else:
        raise DomainError(f"unknown subsample-size rule {rule!r}")
    return int(np.clip(round(m), 2, n - 1))


def _block_statistics(data: DataMatrix, mu0, m: int, cfg: PelConfig):
    """-log R*_m(mu0; I) on every overlapping block, lambda re-set to c* m/p.

    Failed block solves are recorded as NaN; NumericError above the 1%
    tolerance (isolated failures must not silently bias the quantiles).
    """
    plan = SubsamplingPlan(n=data.n, m=m, regime="ne", c_star=cfg.c_star)
    block_cfg = replace(cfg, lam=None)
    mu0 = np.asarray(mu0, dtype=float)
    n_blocks = data.n - m + 1
    stats = np.empty(n_blocks)
    failed = 0
    for i in range(n_blocks):
        sub = compute_column_stats(data.values[i:i + m])
        try:
            stats[i] = solve_pel(sub, mu0, block_cfg).stat
        except ConvergenceError as exc:
            logger.warning("block %d/%d failed: %s", i, n_blocks, exc)
            stats[i] = np.nan
            failed += 1
    if failed > MAX_BLOCK_FAILURE_RATE * n_blocks:
        raise NumericError(
            f"{failed}/{n_blocks} subsample blocks failed to converge")
    starts = np.arange(n_blocks)
    return plan, starts, stats, failed


def build_curve_ne(data: DataMatrix, mu0, m: int,
                   cfg: PelConfig) -> CalibrationCurve:
    """Subsampling estimate of the null law of the raw statistic (NE regime)."""
    _, starts, stats, failed = _block_statistics(data, mu0, m, cfg)
    ok = ~np.isnan(stats)
    return CalibrationCurve(
        sorted_values=np.sort(stats[ok]), regime="ne",
        block_starts=starts, block_stats=stats, n_failed=failed,
    )


def build_curve_ergodic(data: DataMatrix, mu0, m: int, alpha_hat: float,
                        cfg: PelConfig) -> CalibrationCurve:
    """Centered/scaled subsample statistics V*_m = b_hat (stat - c*).

    b_hat = p^(min(alpha_hat, 1/2)) uses the full-data dimension p (only
    the observation index is subsampled) and the full-data alpha_hat.
    """
    if not np.isfinite(alpha_hat):
        raise DomainError(f"alpha_hat must be finite, got {alpha_hat}")
    _, starts, stats, failed = _block_statistics(data, mu0, m, cfg)
    b_hat = data.p ** min(alpha_hat, 0.5)
    v = b_hat * (stats - cfg.c_star)
    ok = ~np.isnan(v)
    return CalibrationCurve(
        sorted_values=np.sort(v[ok]), regime="ergodic",
        block_starts=starts, block_stats=v, n_failed=failed,
    )


def quantile(curve: CalibrationCurve, q: float) -> float:
    """Order-statistic quantile: the ceil(q N)-th smallest curve value."""
    if not 0 < q < 1:
        raise DomainError(f"q must lie in (0,1), got {q}")
    n = len(curve)
    if n == 0:
        raise DomainError("empty calibration curve")
    t = q * n
    # snap floating products like 0.1*30 = 3.0000000000000004 back to the integer
    k = round(t) if abs(t - round(t)) < 1e-9 else math.ceil(t)
    k = min(max(k, 1), n)
    return float(curve.sorted_values[k - 1])


def estimate_alpha_invariant(data: DataMatrix) -> float:
    """Permutation/affine-invariant estimator of the decay exponent alpha.

    alpha_hat = -log(e_n + mean_i {p^{-1} sum_j (X_ij - colmean_j)
    sqrt(delta_j)}^2) / log(p), where e_n = 1 only if every column is
    constant.  Not clamped; callers apply min(alpha_hat, 1/2) where needed.
    """
    if data.p < 2:
        raise DimensionError("need p >= 2")
    e_n = 1.0 if not np.any(data.col_var > 0) else 0.0
    w = np.sqrt(data.delta)
    inner = (data.values - data.col_mean) @ w / data.p
    arg = e_n + float(np.mean(inner**2))
    if arg <= 0:
        raise NumericError("argument of log is nonpositive")
    return -math.log(arg) / math.log(data.p)


def _hurst_block_sizes(p: int) -> np.ndarray:
    """Geometric grid of block sizes in [2, p/4], dyadic when that suffices."""
    top = p // 4
    sizes = []
    s = 2
    while s <= top:
        sizes.append(s)
        s *= 2
    if len(sizes) < 3:
        # refine the ratio to sqrt(2); still geometric, >= 3 sizes for p >= 16
        sizes, s = [], 2.0
        while round(s) <= top:
            if not sizes or round(s) > sizes[-1]:
                sizes.append(round(s))
            s *= math.sqrt(2.0)
    return np.asarray(sizes, dtype=int)


def estimate_alpha_hurst(data: DataMatrix) -> float:
    """alpha_hat = 2 - 2*H_hat with H_hat the aggregated-variance Hurst estimate.

    Each row is treated as one p-long series: for block sizes s on a
    geometric grid, the variance of the s-block means is regressed (log-log)
    on s; the slope beta gives H = 1 + beta/2, and the row estimates are
    averaged.  Rows with a vanishing block variance are skipped as
    degenerate; DegenerateDataError if none survive.
    """
    n, p = data.n, data.p
    if p < 16:
        raise DimensionError(f"need p >= 16 for the Hurst grid, got {p}")
    sizes = _hurst_block_sizes(p)
    if sizes.size < 3:
        raise DimensionError(
            f"p={p} too short for >= 3 aggregation block sizes")
    log_var = np.empty((n, sizes.size))
    for col, s in enumerate(sizes):
        nb = p // s
        means = data.values[:, : nb * s].reshape(n, nb, s).mean(axis=2)
        log_var[:, col] = np.var(means, axis=1)
    valid = np.all(log_var > 0, axis=1)
    if not np.any(valid):
        raise DegenerateDataError(
            "every row is degenerate (zero block-mean variance)")
    if not np.all(valid):
        logger.debug("skipping %d degenerate rows in Hurst estimation",
                     int(np.sum(~valid)))
    log_var = np.log(log_var[valid])
    x = np.log(sizes.astype(float))
    xc = x - x.mean()
    slopes = (log_var - log_var.mean(axis=1, keepdims=True)) @ xc / (xc @ xc)
    h_hat = float(np.mean(1.0 + slopes / 2.0))
    return 2.0 - 2.0 * h_hat


def estimate_kappa_sq_invariant(data: DataMatrix, c_star: float) -> float:
    """Thresholded sum of squared component correlations, symmetrized.

    Pairwise correlations c(a,j) (delta^(1/2)-weighted cross moments, zero
    when either column is constant) enter only if |c(a,j)| exceeds
    2 n^{-1/2} log n; the squared survivors are averaged over anchor
    components a and scaled so that p perfectly duplicated unit-variance
    columns yield exactly 2 c*^2 (p-2).  Always >= 0.
    """
    n, p = data.n, data.p
    if n < 3 or p < 3:
        raise DimensionError("need n >= 3 and p >= 3")
    w = np.sqrt(data.delta)
    xc = (data.values - data.col_mean) * w
    corr = (xc.T @ xc) / n
    np.fill_diagonal(corr, 0.0)
    thr = 2.0 * math.log(n) / math.sqrt(n)
    surv = np.where(np.abs(corr) > thr, corr**2, 0.0)
    total = float(surv.sum())  # ordered pairs a != j
    return 2.0 * c_star**2 * (p - 2) / (p - 1) * total / p


def estimate_kappa_sq_plugin(data: DataMatrix, c_star: float) -> float:
    """Plug-in estimate 2 c*^2 (1 + sum_{k=1}^K rho_hat(k)^2), K = min(p/2, sqrt(p)).

    rho_hat(k) averages, over rows, the lag-k autocorrelation of the row
    series centered at the column means (lag-k products normalized by p-k).
    The leading 1 is the exact k = 0 term of the target series.  Rows with
    no variation around the column means are skipped.
    """
    n, p = data.n, data.p
    if p < 4:
        raise DimensionError("need p >= 4")
    k_max = int(min(p / 2, math.sqrt(p)))
    y = data.values - data.col_mean
    denom = np.sum(y**2, axis=1) / p
    valid = denom > 0
    if not np.any(valid):
        raise DegenerateDataError("every row equals the column means")
    y = y[valid]
    denom = denom[valid]
    acc = 0.0
    for k in range(1, k_max + 1):
        num = np.sum(y[:, :-k] * y[:, k:], axis=1) / (p - k)
        acc += float(np.mean(num / denom)) ** 2
    return 2.0 * c_star**2 * (1.0 + acc)


def decide(statistic: float, curve: CalibrationCurve, level: float) -> TestReport:
    """One-sided calibrated test: reject iff statistic > (1-level)-quantile."""
    if not 0 < level < 1:
        raise DomainError(f"level must lie in (0,1), got {level}")
    threshold = quantile(curve, 1.0 - level)
    return TestReport(
        statistic=float(statistic), threshold=threshold,
        rejected=bool(statistic > threshold), regime=curve.regime,
    )


def conservative_reject(statistic: float, c_star: float, n: int) -> bool:
    """Scale-free conservative rule: reject iff |statistic - c*| > log(n)/n.

    Valid for arbitrarily fast dimension growth in the ergodic regime; the
    attained level shrinks to 0 as n grows.
    """
    if n < 2:
        raise DimensionError("need n >= 2")
    return abs(statistic - c_star) > math.log(n) / n
