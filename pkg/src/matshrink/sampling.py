"""Reproducible sampling for the normal-means model.

A draw is an n x p matrix X of normals with mean matrix theta, either with
independent entries of variance sigma2 or, when a row covariance is given,
with i.i.d. rows N_p(theta_row, Sigma).  An unknown-variance model adds an
auxiliary vector u with u_j ~ sigma2 * chi-square(nu), sampled as the sum
of nu squared normals, independent of X.

Every replicate owns a fixed range of Philox counter blocks derived from
(master_seed, stream_id, replicate), so draws are bit-identical no matter
how replicates are batched or distributed across threads.  Word layout per
replicate: the first n*p words fill X row-major, the next p*nu words (when
present) fill the auxiliary normals column by column.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from . import kernels, linalg
from .accumulate import Moments, merge_in_order

_MAX_CHUNK = 16384
_MIN_CHUNK = 128
_CHUNK_WORD_BUDGET = 1 << 22


@dataclass(frozen=True)
class SeedSpec:
    """Root of a reproducible random stream.

    (master_seed, stream_id, replicate) fully determines every draw; the
    pair maps to a 128-bit Philox key with the master seed in the low
    word.
    """

    master_seed: int
    stream_id: int = 0

    def __post_init__(self):
        for name in ("master_seed", "stream_id"):
            v = getattr(self, name)
            if not isinstance(v, int) or not 0 <= v < 1 << 64:
                raise ValueError(f"{name} must be an unsigned 64-bit integer")

    def philox_key(self) -> int:
        return (self.stream_id << 64) | self.master_seed


@dataclass(eq=False)
class ModelSpec:
    """Ground truth for a sampling experiment.

    nu=None means the entry variance sigma2 is known; an integer nu >= 1
    switches on the auxiliary u ~ sigma2 * chi2_nu per column.  row_cov,
    when present, replaces the independent-entry model with i.i.d. rows of
    covariance row_cov (requires sigma2=1 and known variance).
    """

    n: int
    p: int
    theta: np.ndarray
    sigma2: float = 1.0
    nu: int | None = None
    row_cov: np.ndarray | None = None

    def __post_init__(self):
        if self.n < 1 or self.p < 1:
            raise ValueError("n and p must be positive")
        self.theta = np.asarray(self.theta, dtype=np.float64)
        if self.theta.shape != (self.n, self.p):
            raise ValueError(
                f"theta must have shape ({self.n}, {self.p}), got {self.theta.shape}"
            )
        if not np.all(np.isfinite(self.theta)):
            raise ValueError("theta contains non-finite entries")
        if not (np.isfinite(self.sigma2) and self.sigma2 > 0):
            raise ValueError("sigma2 must be positive and finite")
        if self.nu is not None and (not isinstance(self.nu, int) or self.nu < 1):
            raise ValueError("nu must be an integer >= 1 when given")
        if self.row_cov is not None:
            self.row_cov = np.asarray(self.row_cov, dtype=np.float64)
            if self.row_cov.shape != (self.p, self.p):
                raise ValueError("row_cov must be p x p")
            sym_err = np.abs(self.row_cov - self.row_cov.T).max()
            if sym_err > 1e-10 * max(1.0, np.abs(self.row_cov).max()):
                raise ValueError("row_cov must be symmetric")
            if self.nu is not None:
                raise ValueError(
                    "row covariance with unknown variance is not supported"
                )
            if self.sigma2 != 1.0:
                raise ValueError("row_cov requires sigma2 = 1.0")

    @property
    def variance_known(self) -> bool:
        return self.nu is None


@dataclass(eq=False)
class Draw:
    """One realization: the data matrix and, for unknown-variance models,
    the auxiliary chi-square vector."""

    x: np.ndarray
    u: np.ndarray | None = None


class DrawPlan:
    """Precomputed layout for drawing replicates of a model.

    Stateless after construction; `batch` may be called concurrently for
    disjoint replicate ranges.
    """

    def __init__(self, model: ModelSpec, seed: SeedSpec,
                 backend: str | None = None):
        self.model = model
        self.seed = seed
        self.backend = backend
        self.key = seed.philox_key()
        nu = 0 if model.nu is None else model.nu
        self.words = model.n * model.p + model.p * nu
        self.blocks = math.ceil(self.words / 4)
        self._scale = math.sqrt(model.sigma2)
        self._row_half = (
            linalg.spd_sqrt(model.row_cov) if model.row_cov is not None else None
        )

    def batch(self, rep_start: int, nreps: int) -> tuple[np.ndarray, np.ndarray | None]:
        """Draws for replicates [rep_start, rep_start + nreps):
        (x of shape (nreps, n, p), u of shape (nreps, p) or None)."""
        m = self.model
        z = kernels.replicate_normals(
            self.key, self.blocks, rep_start, nreps, self.words,
            backend=self.backend,
        )
        zx = z[:, : m.n * m.p].reshape(nreps, m.n, m.p)
        if self._row_half is not None:
            x = m.theta + zx @ self._row_half
        else:
            x = m.theta + self._scale * zx
        if m.nu is None:
            return x, None
        zu = z[:, m.n * m.p:].reshape(nreps, m.p, m.nu)
        u = m.sigma2 * np.einsum("rjk,rjk->rj", zu, zu)
        return x, u


def draw(model: ModelSpec, seed: SeedSpec, replicate: int) -> Draw:
    """Deterministic draw of one replicate; bit-identical to the same
    replicate produced inside any batch."""
    if replicate < 0:
        raise ValueError("replicate index must be nonnegative")
    x, u = DrawPlan(model, seed).batch(replicate, 1)
    return Draw(x[0], None if u is None else u[0])


def draw_batch(model: ModelSpec, seed: SeedSpec, rep_start: int,
               nreps: int) -> tuple[np.ndarray, np.ndarray | None]:
    """Draws for a contiguous replicate range, stacked along axis 0."""
    if rep_start < 0 or nreps < 1:
        raise ValueError("need rep_start >= 0 and nreps >= 1")
    return DrawPlan(model, seed).batch(rep_start, nreps)


def default_chunk_size(words_per_rep: int) -> int:
    """Replicates per accumulation chunk: a fixed function of the model's
    word count, independent of thread count (part of the deterministic
    reduction layout)."""
    return max(_MIN_CHUNK, min(_MAX_CHUNK, _CHUNK_WORD_BUDGET // max(words_per_rep, 1)))


def run_replicated(model: ModelSpec, seed: SeedSpec, reps: int,
                   eval_fn: Callable[[np.ndarray, np.ndarray | None], np.ndarray],
                   threads: int = 1, chunk_size: int | None = None,
                   backend: str | None = None) -> Moments:
    """Accumulate per-replicate feature moments over `reps` draws.

    eval_fn maps a draw batch (x, u) to a (batch, width) feature array.
    Chunks are fixed-size slices of the replicate range and are merged in
    chunk order, so the result is bit-identical for any `threads`.
    """
    if reps < 1:
        raise ValueError("reps must be >= 1")
    if threads < 1:
        raise ValueError("threads must be >= 1")
    plan = DrawPlan(model, seed, backend=backend)
    size = chunk_size if chunk_size is not None else default_chunk_size(plan.words)
    starts = list(range(0, reps, size))

    def work(start: int) -> Moments:
        count = min(size, reps - start)
        x, u = plan.batch(start, count)
        feats = eval_fn(x, u)
        return Moments.from_chunk(np.asarray(feats, dtype=np.float64))

    if threads == 1 or len(starts) == 1:
        parts = [work(s) for s in starts]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(work, starts))
    return merge_in_order(parts)


class MeanEstimate(NamedTuple):
    """Monte Carlo scalar estimate with its standard error."""

    value: float
    se: float
    reps: int


def chi2_mean_inverse_mc(n: int, lambda2: float, reps: int,
                         seed: SeedSpec, threads: int = 1) -> MeanEstimate:
    """Monte Carlo estimate of E[1 / ||x||^2] for x ~ N_n(theta, I) with
    ||theta||^2 = lambda2 (theta placed on the first axis; the expectation
    only depends on the norm).

    Requires n >= 3: the inverse second moment is infinite for n <= 2.
    """
    if n <= 2:
        raise ValueError("n must be >= 3 for E[1/||x||^2] to be finite")
    if lambda2 < 0:
        raise ValueError("lambda2 must be nonnegative")
    if reps < 1:
        raise ValueError("reps must be >= 1")
    theta = np.zeros((n, 1))
    theta[0, 0] = math.sqrt(lambda2)
    model = ModelSpec(n=n, p=1, theta=theta)

    def eval_fn(x, u):
        normsq = np.einsum("rij,rij->r", x, x)
        return (1.0 / normsq)[:, None]

    mom = run_replicated(model, seed, reps, eval_fn, threads=threads)
    return MeanEstimate(float(mom.mean[0]), float(mom.se_of_mean()[0]), reps)


class SteinIdentityCheck(NamedTuple):
    """Paired Monte Carlo estimates of the two sides of the shrinkage
    cross-product identity for x ~ N_n(theta, I): lhs = E[x'(x - theta) /
    ||x||^2] and rhs = (n-2) E[1 / ||x||^2].  Both estimate the same
    noncentrality curve; diff carries the common-draw standard error."""

    lhs: float
    lhs_se: float
    rhs: float
    rhs_se: float
    diff: float
    diff_se: float
    reps: int


def stein_identity_mc(n: int, lambda2: float, reps: int,
                      seed: SeedSpec, threads: int = 1) -> SteinIdentityCheck:
    """Estimate both sides of the cross-product identity on common draws."""
    if n <= 2:
        raise ValueError("the identity requires n >= 3")
    if lambda2 < 0:
        raise ValueError("lambda2 must be nonnegative")
    theta = np.zeros((n, 1))
    theta[0, 0] = math.sqrt(lambda2)
    model = ModelSpec(n=n, p=1, theta=theta)
    tcol = theta[:, 0]

    def eval_fn(x, u):
        xv = x[:, :, 0]
        normsq = np.einsum("ri,ri->r", xv, xv)
        lhs = np.einsum("ri,ri->r", xv, xv - tcol) / normsq
        rhs = (n - 2.0) / normsq
        return np.stack([lhs, rhs], axis=1)

    mom = run_replicated(model, seed, reps, eval_fn, threads=threads)
    se = mom.se_of_mean()
    cov = mom.cov_of_mean()
    diff_var = cov[0, 0] + cov[1, 1] - 2.0 * cov[0, 1]
    return SteinIdentityCheck(
        lhs=float(mom.mean[0]), lhs_se=float(se[0]),
        rhs=float(mom.mean[1]), rhs_se=float(se[1]),
        diff=float(mom.mean[0] - mom.mean[1]),
        diff_se=float(math.sqrt(max(diff_var, 0.0))),
        reps=reps,
    )
