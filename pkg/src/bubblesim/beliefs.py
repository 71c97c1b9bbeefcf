"""Gaussian beliefs over unconsumed items and their sequential updating.

A belief is a multivariate normal over the realized values of the items a
user has not yet consumed. Consuming an item reveals its value exactly, so
the posterior is the classic partitioned-Gaussian conditional. The
production path applies one rank-one update per observation;
batch_condition keeps the full partitioned formula as an independent check.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericalError
from .product_space import ModelParams, UserGroundTruth, build_covariance

NO_RECOMMENDATION = "no_recommendation"
RECOMMENDATION = "recommendation"
ORACLE = "oracle"
REGIMES = (NO_RECOMMENDATION, RECOMMENDATION, ORACLE)

# Observed variances at or below this are treated as already-known values:
# the item is removed without a numerical update.
DEGENERATE_VARIANCE = 1e-12
# Posterior diagonal entries may round this far below zero; lower means a bug.
DIAGONAL_SLACK = 1e-9
# Observed-block conditioning is refused beyond this condition number.
MAX_CONDITION_NUMBER = 1e12


@dataclass
class BeliefState:
    """Belief over the not-yet-consumed items.

    remaining holds item indices in ascending order; mean and cov are
    aligned with it. One trajectory owns one state; operations return new
    states and never mutate their input.
    """

    remaining: np.ndarray
    mean: np.ndarray
    cov: np.ndarray
    consumed_count: int = 0

    def position(self, item: int) -> int:
        """Index of item within remaining; raises if already consumed."""
        pos = np.searchsorted(self.remaining, item)
        if pos >= self.remaining.size or self.remaining[pos] != item:
            raise ValueError(f"item {item} is not among the remaining items")
        return int(pos)


def init_beliefs(
    user: UserGroundTruth,
    common_values: np.ndarray,
    params: ModelParams,
    regime: str,
) -> BeliefState:
    """Build the period-1 belief for a recommendation regime.

    no_recommendation: the common field is unknown, so it folds into the
    uncertainty entirely (mean = prior means, cov = idio + beta^2 * common
    kernels, using independence of the two fields).
    recommendation: the common field is revealed up front and shifts the
    mean; only idiosyncratic uncertainty remains.
    oracle: realized values are known exactly (zero covariance), which
    makes the downstream choice rule pick the best remaining item.
    """
    if regime not in REGIMES:
        raise ValueError(f"unknown regime {regime!r}; expected one of {REGIMES}")
    n = params.n_items
    common_values = np.asarray(common_values, dtype=float)
    if user.prior_means.shape != (n,) or common_values.shape != (n,):
        raise ValueError(
            f"user vectors of length {user.prior_means.shape[0]} and common values of "
            f"length {common_values.shape[0]} do not match n_items={n}"
        )

    if regime == NO_RECOMMENDATION:
        mean = user.prior_means.copy()
        cov = build_covariance(
            params.sigma_i**2 + params.beta**2 * params.sigma**2, params.rho, n
        )
    elif regime == RECOMMENDATION:
        mean = user.prior_means + params.beta * common_values
        cov = build_covariance(params.sigma_i**2, params.rho, n)
    else:
        mean = user.realized_values.copy()
        cov = np.zeros((n, n))
    return BeliefState(remaining=np.arange(n), mean=mean, cov=cov, consumed_count=0)


def _drop_index_vector(vec: np.ndarray, k: int) -> np.ndarray:
    return np.concatenate([vec[:k], vec[k + 1 :]])


def _drop_index_matrix(mat: np.ndarray, k: int) -> np.ndarray:
    n = mat.shape[0]
    out = np.empty((n - 1, n - 1), dtype=mat.dtype)
    out[:k, :k] = mat[:k, :k]
    out[:k, k:] = mat[:k, k + 1 :]
    out[k:, :k] = mat[k + 1 :, :k]
    out[k:, k:] = mat[k + 1 :, k + 1 :]
    return out


def condition_on_observation(state: BeliefState, item: int, observed: float) -> BeliefState:
    """Condition the belief on one observed value and retire the item.

    Applies the rank-one update
        mean' = mean + cov[:, k] * (observed - mean[k]) / cov[k, k]
        cov'  = cov - outer(cov[:, k], cov[k, :]) / cov[k, k]
    then drops row/column k. Sequential application reproduces the batch
    partitioned conditional (see batch_condition). The update is skipped
    when the observed variance is degenerate, since the value was already
    known and dividing by it would be unstable.

    Symmetry survives exactly: the outer product and the block copies are
    entrywise symmetric, so no re-symmetrization pass is required.
    """
    k = state.position(item)
    variance = state.cov[k, k]

    new_remaining = _drop_index_vector(state.remaining, k)
    if variance <= DEGENERATE_VARIANCE:
        new_mean = _drop_index_vector(state.mean, k)
        new_cov = _drop_index_matrix(state.cov, k)
    else:
        gain = (observed - state.mean[k]) / variance
        cross = _drop_index_vector(state.cov[:, k], k)
        new_mean = _drop_index_vector(state.mean, k) + cross * gain
        new_cov = _drop_index_matrix(state.cov, k)
        new_cov -= np.outer(cross, cross) / variance
        diag = np.diagonal(new_cov)
        lowest = diag.min() if diag.size else 0.0
        if lowest < -DIAGONAL_SLACK:
            raise NumericalError(
                f"posterior variance {lowest:.3e} fell below -{DIAGONAL_SLACK:.0e} "
                f"after observing item {item}"
            )
        if lowest < 0.0:
            np.fill_diagonal(new_cov, np.maximum(diag, 0.0))
    return BeliefState(
        remaining=new_remaining,
        mean=new_mean,
        cov=new_cov,
        consumed_count=state.consumed_count + 1,
    )


def batch_condition(
    prior_mean: np.ndarray,
    prior_cov: np.ndarray,
    observed_items: np.ndarray,
    observed_values: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """Partitioned-Gaussian conditional over the complement of the observed set.

    Returns (mean, cov) for the unobserved indices in ascending order,
    computed directly from
        mean_rest + C_ro @ solve(C_oo, observed - mean_obs)
        C_rr - C_ro @ solve(C_oo, C_or)
    with a linear solve instead of an explicit inverse. Retained as the
    testing oracle for the incremental path.
    """
    prior_mean = np.asarray(prior_mean, dtype=float)
    prior_cov = np.asarray(prior_cov, dtype=float)
    observed_items = np.asarray(observed_items, dtype=int)
    observed_values = np.asarray(observed_values, dtype=float)
    n = prior_mean.shape[0]

    if observed_items.size == 0:
        return prior_mean.copy(), prior_cov.copy()
    if np.unique(observed_items).size != observed_items.size:
        raise ValueError("observed_items must be distinct")
    if observed_items.min() < 0 or observed_items.max() >= n:
        raise ValueError("observed_items out of range")
    if observed_values.shape != observed_items.shape:
        raise ValueError("observed_values must align with observed_items")

    rest = np.setdiff1d(np.arange(n), observed_items)
    cov_oo = prior_cov[np.ix_(observed_items, observed_items)]
    condition = np.linalg.cond(cov_oo)
    if not np.isfinite(condition) or condition > MAX_CONDITION_NUMBER:
        raise NumericalError(
            f"observed-block covariance for items {observed_items.tolist()} is "
            f"near-singular (condition number {condition:.3e})"
        )
    cov_ro = prior_cov[np.ix_(rest, observed_items)]
    innovation = np.linalg.solve(cov_oo, observed_values - prior_mean[observed_items])
    mean = prior_mean[rest] + cov_ro @ innovation
    cov = prior_cov[np.ix_(rest, rest)] - cov_ro @ np.linalg.solve(cov_oo, cov_ro.T)
    return mean, cov


def certainty_equivalent(state: BeliefState, item: int, gamma: float) -> float:
    """Sure value the user trades for the item: mean minus gamma/2 times variance.

    This is the exponential-utility certainty equivalent of a Gaussian
    gamble; gamma = 0 reduces to the expected value.
    """
    if gamma < 0:
        raise ValueError(f"gamma must be >= 0, got {gamma}")
    k = state.position(item)
    return float(state.mean[k] - 0.5 * gamma * state.cov[k, k])
