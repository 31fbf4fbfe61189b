"""Estimators of the n x p mean matrix and their vector building blocks.

The column-shrinkage family multiplies each column j of X by
d_j = 1 - a * s_j * (n-2) / ||x_(j)||^2, where s_j is sigma2 when the
variance is known and u_j / (nu + 2) when it is estimated from the
auxiliary chi-square vector.  No positive-part truncation is applied: the
factors may go negative, matching the raw form whose risk the analytic
oracles describe.  Shrinkage of one column never reads another column.

Also provided: the whitening variant for a known row covariance (transform
to independent columns, shrink, transform back), the classical matrix
shrinkage estimator X (I - (n-p-1) S^-1) with S = X'X, the p x p matrix
quadratic loss, and Monte Carlo cross-product statistics.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import linalg
from .sampling import ModelSpec, SeedSpec, run_replicated

ESTIMATOR_KINDS = ("mle", "diagonal-js", "whitened-js", "efron-morris")


class ZeroNormColumnError(ValueError):
    """A data column has zero norm, so its shrinkage factor is undefined
    (a probability-zero event under the sampling model)."""

    def __init__(self, column: int):
        super().__init__(
            f"column {column} has zero norm; shrinkage factor undefined"
        )
        self.column = column


@dataclass(frozen=True)
class EstimatorSpec:
    """Which estimator to evaluate.

    `a` is the tuning constant (ignored by mle and efron-morris);
    `sigma_known` selects the known-variance shrinkage versus the
    auxiliary-variable form and must match the model's variance mode.
    """

    kind: str
    a: float = 1.0
    sigma_known: bool = True

    def __post_init__(self):
        if self.kind not in ESTIMATOR_KINDS:
            raise ValueError(
                f"kind must be one of {ESTIMATOR_KINDS}, got {self.kind!r}"
            )
        if not np.isfinite(self.a):
            raise ValueError("tuning constant a must be finite")


def _as_data_matrix(x, name: str = "x") -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError(f"{name} contains non-finite entries")
    return x


def _col_sumsq(x: np.ndarray) -> np.ndarray:
    """Squared column norms; works on (n, p) or batched (B, n, p) input."""
    return np.einsum("...ij,...ij->...j", x, x)


def _require_positive_norms(normsq: np.ndarray) -> None:
    if np.all(normsq > 0.0):
        return
    flat = normsq.reshape(-1, normsq.shape[-1])
    bad = np.argwhere(flat <= 0.0)
    raise ZeroNormColumnError(int(bad[0][1]))


def shrink_factors(x: np.ndarray, a: float, sigma2: float) -> np.ndarray:
    """Known-variance column shrinkage factors d_j, batched-friendly."""
    n = x.shape[-2]
    normsq = _col_sumsq(x)
    _require_positive_norms(normsq)
    return 1.0 - (a * sigma2 * (n - 2.0)) * (1.0 / normsq)


def shrink_factors_unknown(x: np.ndarray, u: np.ndarray, nu: int,
                           a: float) -> np.ndarray:
    """Estimated-variance factors, with u_j / (nu + 2) in place of sigma2."""
    n = x.shape[-2]
    normsq = _col_sumsq(x)
    _require_positive_norms(normsq)
    return 1.0 - (a * (u / (nu + 2.0)) * (n - 2.0)) * (1.0 / normsq)


def js_shrink_vector(x, a: float, sigma2: float) -> np.ndarray:
    """Shrink a single observation vector toward the origin:
    x * (1 - a * sigma2 * (n-2) / ||x||^2).  Requires n >= 3 and a
    nonzero input vector."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("x must be a 1-D vector")
    if x.shape[0] < 3:
        raise ValueError("shrinkage requires n >= 3")
    if not (np.isfinite(sigma2) and sigma2 > 0):
        raise ValueError("sigma2 must be positive")
    if not np.isfinite(a):
        raise ValueError("a must be finite")
    col = x[:, None]
    d = shrink_factors(col, a, sigma2)
    return (col * d)[:, 0]


def js_shrink_vector_unknown(x, u: float, nu: int, a: float) -> np.ndarray:
    """Shrinkage with sigma2 replaced by u / (nu + 2), u ~ sigma2*chi2_nu."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("x must be a 1-D vector")
    if x.shape[0] < 3:
        raise ValueError("shrinkage requires n >= 3")
    if not (np.isfinite(u) and u > 0):
        raise ValueError("u must be positive")
    if not isinstance(nu, int) or nu < 1:
        raise ValueError("nu must be an integer >= 1")
    if not np.isfinite(a):
        raise ValueError("a must be finite")
    col = x[:, None]
    d = shrink_factors_unknown(col, np.asarray([u]), nu, a)
    return (col * d)[:, 0]


def _diagonal_estimate(x: np.ndarray, u: np.ndarray | None, a: float,
                       sigma2: float, nu: int | None) -> np.ndarray:
    if u is None:
        d = shrink_factors(x, a, sigma2)
    else:
        d = shrink_factors_unknown(x, u, nu, a)
    return x * d[..., None, :]


def diagonal_js(x, u, spec: EstimatorSpec, model: ModelSpec) -> np.ndarray:
    """Column-wise shrinkage of the full data matrix, equal to X diag(d).

    u must be supplied exactly when spec.sigma_known is False (and then
    the model must carry nu).  Raises ZeroNormColumnError naming the first
    zero-norm column.
    """
    x = _as_data_matrix(x)
    n, p = x.shape
    if n < 3:
        raise ValueError("shrinkage requires n >= 3")
    if spec.sigma_known:
        if u is not None:
            raise ValueError("u must not be supplied when sigma is known")
        return _diagonal_estimate(x, None, spec.a, model.sigma2, None)
    if u is None:
        raise ValueError("u is required when sigma is unknown")
    if model.nu is None:
        raise ValueError("model must carry nu for the unknown-sigma form")
    u = np.asarray(u, dtype=np.float64)
    if u.shape != (p,):
        raise ValueError(f"u must have shape ({p},)")
    if not np.all(u > 0):
        raise ValueError("u entries must be positive")
    return _diagonal_estimate(x, u, spec.a, model.sigma2, model.nu)


def efron_morris(x) -> np.ndarray:
    """The matrix shrinkage estimator X (I - (n-p-1) S^-1), S = X'X.

    Requires n >= p + 2; raises SingularMatrixError when S is singular or
    nearly so.
    """
    x = _as_data_matrix(x)
    n, p = x.shape
    if n < p + 2:
        raise ValueError(f"requires n >= p + 2, got n={n}, p={p}")
    s = linalg.gram(x)
    s_inv = linalg.solve_spd(s, np.eye(p))
    t = np.eye(p) - (n - p - 1.0) * s_inv
    return x @ t


def whitened_js(x, spec: EstimatorSpec, model: ModelSpec) -> np.ndarray:
    """Shrinkage under a known row covariance: whiten the columns with
    A = Sigma^{-1/2}, shrink column-wise treating the transformed data as
    unit-variance, and transform back with A^{-1}."""
    if model.row_cov is None:
        raise ValueError("whitened shrinkage requires model.row_cov")
    x = _as_data_matrix(x)
    if x.shape[-2] < 3:
        raise ValueError("shrinkage requires n >= 3")
    a_mat, a_inv = linalg.spd_sqrt_inv_pair(model.row_cov)
    y = x @ a_mat
    phi = _diagonal_estimate(y, None, spec.a, 1.0, None)
    return phi @ a_inv


def matrix_loss(theta_hat, theta) -> np.ndarray:
    """The p x p matrix quadratic loss (theta_hat - theta)'(theta_hat -
    theta): symmetric, positive semidefinite, trace equal to the summed
    squared error."""
    theta_hat = _as_data_matrix(theta_hat, "theta_hat")
    theta = _as_data_matrix(theta, "theta")
    if theta_hat.shape != theta.shape:
        raise ValueError(
            f"shape mismatch: {theta_hat.shape} vs {theta.shape}"
        )
    resid = theta_hat - theta
    return np.einsum("ij,ik->jk", resid, resid)


def _unscaled_shrinkage(x: np.ndarray, u: np.ndarray | None, sigma2: float,
                        nu: int | None) -> np.ndarray:
    """The shrinkage function g per column with the tuning constant left
    out, so that the estimator is x - a * g."""
    n = x.shape[-2]
    normsq = _col_sumsq(x)
    _require_positive_norms(normsq)
    if u is None:
        coef = (sigma2 * (n - 2.0)) * (1.0 / normsq)
    else:
        coef = ((u / (nu + 2.0)) * (n - 2.0)) * (1.0 / normsq)
    return x * coef[..., None, :]


class CrossProductStats(NamedTuple):
    """Per-column Monte Carlo estimates of delta_j = E[(x_(j) -
    theta_(j))' g_(j)] and gamma_j = E[||g_(j)||^2] for the unscaled
    shrinkage function, with standard errors and the common-draw standard
    error of their difference."""

    delta: np.ndarray
    delta_se: np.ndarray
    gamma: np.ndarray
    gamma_se: np.ndarray
    diff_se: np.ndarray
    reps: int


def cross_product_stats(model: ModelSpec, spec: EstimatorSpec, reps: int,
                        seed: SeedSpec, threads: int = 1) -> CrossProductStats:
    """Estimate the cross-product statistics column by column.

    delta_j >= gamma_j > 0 is what makes shrinkage dominate; for this
    shrinkage function the two are equal, which the paired difference SE
    lets callers check sharply.
    """
    if model.n < 3:
        raise ValueError("requires n >= 3")
    if spec.sigma_known != model.variance_known:
        raise ValueError("spec.sigma_known must match the model variance mode")
    p = model.p
    theta = model.theta

    def eval_fn(x, u):
        g = _unscaled_shrinkage(x, u, model.sigma2, model.nu)
        delta = np.einsum("rij,rij->rj", x - theta, g)
        gamma = np.einsum("rij,rij->rj", g, g)
        return np.concatenate([delta, gamma], axis=1)

    mom = run_replicated(model, seed, reps, eval_fn, threads=threads)
    se = mom.se_of_mean()
    cov = mom.cov_of_mean()
    idx = np.arange(p)
    diff_var = cov[idx, idx] + cov[p + idx, p + idx] - 2.0 * cov[idx, p + idx]
    return CrossProductStats(
        delta=mom.mean[:p].copy(), delta_se=se[:p].copy(),
        gamma=mom.mean[p:].copy(), gamma_se=se[p:].copy(),
        diff_se=np.sqrt(np.maximum(diff_var, 0.0)), reps=reps,
    )
