"""Least-squares fits, slope reports and the regression-rate overhead metric."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterable, Sequence

import numpy as np

if TYPE_CHECKING:
    from hookcost.latency import SweepResult

RANK_TOL = 1e-10


class RegressionError(ValueError):
    """Degenerate regression input."""


@dataclass(frozen=True)
class RegressionResult:
    coefficients: tuple[float, ...]  # intercept first
    r_squared: float
    std_errors: tuple[float, ...] = ()

    @property
    def intercept(self) -> float:
        return self.coefficients[0]

    @property
    def slope(self) -> float:
        if len(self.coefficients) != 2:
            raise AttributeError("slope is only defined for a single predictor")
        return self.coefficients[1]


def _r_squared(y: np.ndarray, fitted: np.ndarray) -> tuple[float, float]:
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot == 0.0:
        raise RegressionError("R^2 undefined: response is constant")
    ss_res = float(np.sum((y - fitted) ** 2))
    return min(max(1.0 - ss_res / ss_tot, 0.0), 1.0), ss_res


def fit_ols(x: Sequence[float], y: Sequence[float]) -> RegressionResult:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.ndim != 1 or x.shape != y.shape:
        raise RegressionError("x and y must be 1-d with equal length")
    n = x.size
    if n < 3:
        raise RegressionError("need at least 3 points")
    dx = x - x.mean()
    sxx = float(dx @ dx)
    if sxx == 0.0:
        raise RegressionError("x is constant")
    slope = float(dx @ (y - y.mean())) / sxx
    intercept = float(y.mean() - slope * x.mean())
    r2, ss_res = _r_squared(y, intercept + slope * x)
    sigma2 = ss_res / (n - 2)
    se_slope = math.sqrt(sigma2 / sxx)
    se_intercept = math.sqrt(sigma2 * (1.0 / n + x.mean() ** 2 / sxx))
    return RegressionResult((intercept, slope), r2, (se_intercept, se_slope))


def _pivoted_cholesky(a: np.ndarray, tol: float):
    """Lower factor L and permutation with ``a[perm][:, perm] = L @ L.T``.

    Raises when a pivot falls below ``tol`` times the largest diagonal.
    """
    a = a.copy()
    p = a.shape[0]
    perm = np.arange(p)
    scale = float(np.max(np.diag(a))) if p else 0.0
    if scale <= 0.0:
        raise RegressionError("design matrix is rank deficient")
    L = np.zeros_like(a)
    for k in range(p):
        resid = np.diag(a)[k:] - np.sum(L[k:, :k] ** 2, axis=1)
        j = k + int(np.argmax(resid))
        if resid[j - k] <= tol * scale:
            raise RegressionError(f"design matrix is rank deficient (rank {k} < {p})")
        if j != k:
            a[[k, j]] = a[[j, k]]
            a[:, [k, j]] = a[:, [j, k]]
            L[[k, j]] = L[[j, k]]
            perm[[k, j]] = perm[[j, k]]
        L[k, k] = math.sqrt(resid[j - k])
        if k + 1 < p:
            L[k + 1:, k] = (a[k + 1:, k] - L[k + 1:, :k] @ L[k, :k]) / L[k, k]
    return L, perm


def _cho_solve(L: np.ndarray, b: np.ndarray) -> np.ndarray:
    z = np.zeros_like(b)
    for i in range(len(b)):
        z[i] = (b[i] - L[i, :i] @ z[:i]) / L[i, i]
    out = np.zeros_like(b)
    for i in reversed(range(len(b))):
        out[i] = (z[i] - L[i + 1:, i] @ out[i + 1:]) / L[i, i]
    return out


def fit_multiple_ols(X, y: Sequence[float]) -> RegressionResult:
    """OLS with an intercept column prepended to the predictors in ``X``.

    Predictors are centered and scaled before forming the normal equations,
    which keeps the system well conditioned when they sit far from zero.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2 or X.shape[0] != y.shape[0] or y.ndim != 1:
        raise RegressionError("X must be n x p and y length n")
    n, p = X.shape
    if n < p + 2:
        raise RegressionError(f"need at least {p + 2} rows for {p} predictors")

    means = X.mean(axis=0)
    Xc = X - means
    norms = np.sqrt(np.sum(Xc ** 2, axis=0))
    if np.any(norms == 0.0):
        raise RegressionError("design matrix is rank deficient (constant predictor)")
    Z = Xc / norms
    L, perm = _pivoted_cholesky(Z.T @ Z, RANK_TOL)
    zy = Z.T @ (y - y.mean())
    beta_scaled = np.empty(p)
    beta_scaled[perm] = _cho_solve(L, zy[perm])
    beta = beta_scaled / norms
    intercept = float(y.mean() - means @ beta)
    fitted = intercept + X @ beta
    r2, ss_res = _r_squared(y, fitted)

    # (Z^T Z)^-1 from the factor, for standard errors
    eye = np.eye(p)
    inv = np.empty((p, p))
    for i in range(p):
        col = np.empty(p)
        col[perm] = _cho_solve(L, eye[perm, i])
        inv[:, i] = col
    dof = n - p - 1
    sigma2 = ss_res / dof
    cov_beta = sigma2 * inv / np.outer(norms, norms)
    var_intercept = sigma2 / n + means @ cov_beta @ means
    ses = (math.sqrt(max(var_intercept, 0.0)),) + tuple(
        math.sqrt(max(v, 0.0)) for v in np.diag(cov_beta)
    )
    return RegressionResult((intercept,) + tuple(float(b) for b in beta), r2, ses)


@dataclass(frozen=True)
class RegressionRate:
    baseline: float
    target: float
    metric_kind: str
    rate: float


def regression_rate(target: float, baseline: float, metric_kind: str = "latency") -> RegressionRate:
    """Relative overhead of ``target`` over ``baseline``; positive means worse.

    Latency is lower-is-better, so the rate is (target - baseline) / baseline;
    throughput is higher-is-better, so the sign is flipped.
    """
    if not baseline > 0:
        raise ValueError(f"baseline must be positive, got {baseline}")
    if metric_kind == "latency":
        rate = (target - baseline) / baseline
    elif metric_kind == "throughput":
        rate = (baseline - target) / baseline
    else:
        raise ValueError(f"unknown metric kind {metric_kind!r}")
    return RegressionRate(baseline, target, metric_kind, rate)


@dataclass(frozen=True)
class SlopeFit:
    scenario: str
    slope: float
    intercept: float
    r_squared: float


def slope_report(sweeps: Iterable[SweepResult]) -> dict[str, SlopeFit]:
    """Fit mean latency (ns) against injected delay (ns) for each sweep."""
    out = {}
    for sweep in sweeps:
        if len(sweep.points) < 3:
            raise RegressionError(f"{sweep.scenario}: need at least 3 grid points")
        x = [pt.delay_us * 1000.0 for pt in sweep.points]
        y = [pt.mean_ns for pt in sweep.points]
        fit = fit_ols(x, y)
        out[sweep.scenario] = SlopeFit(sweep.scenario, fit.slope, fit.intercept, fit.r_squared)
    return out
