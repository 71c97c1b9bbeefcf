"""Circular product space: distances, covariance kernels, ground-truth sampling.

Items live on a ring of N positions. Valuations decompose into a common
component shared by everyone (weight beta) and an idiosyncratic component,
both drawn from stationary Gaussian fields whose covariance decays as
rho^distance around the ring.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import lru_cache
from typing import IO

import numpy as np

from .errors import NumericalError
from .seeding import derive_seed

# Eigenvalues of a kernel may dip this far below zero (relative to the
# marginal variance) from floating-point noise; anything lower is a bug.
EIGENVALUE_SLACK = 1e-10


@dataclass(frozen=True)
class ModelParams:
    """One point in the model's parameter space.

    sigma_i defaults to sigma when not given: the common and idiosyncratic
    fields share one scale unless configured otherwise.
    """

    n_items: int
    horizon: int
    gamma: float
    sigma: float
    rho: float
    beta: float
    sigma_i: float | None = None
    sigma_bar: float = 1.0

    def __post_init__(self):
        if self.n_items <= 0:
            raise ValueError(f"n_items must be positive, got {self.n_items}")
        if self.horizon <= 0:
            raise ValueError(f"horizon must be positive, got {self.horizon}")
        if self.horizon > self.n_items:
            raise ValueError(
                f"horizon ({self.horizon}) cannot exceed n_items ({self.n_items}): "
                "users never exhaust the product space"
            )
        if self.gamma < 0:
            raise ValueError(f"gamma must be >= 0, got {self.gamma}")
        if self.sigma <= 0:
            raise ValueError(f"sigma must be > 0, got {self.sigma}")
        if self.sigma_i is None:
            object.__setattr__(self, "sigma_i", float(self.sigma))
        elif self.sigma_i <= 0:
            raise ValueError(f"sigma_i must be > 0, got {self.sigma_i}")
        if self.sigma_bar < 0:
            raise ValueError(f"sigma_bar must be >= 0, got {self.sigma_bar}")
        if not 0.0 <= self.rho < 1.0:
            raise ValueError(f"rho must lie in [0, 1), got {self.rho}")
        if self.beta < 0:
            raise ValueError(f"beta must be >= 0, got {self.beta}")


@dataclass(frozen=True)
class UserGroundTruth:
    """A single user's true valuations and prior mean beliefs.

    realized_values == idiosyncratic_values + beta * common_values by
    construction; arrays are frozen read-only.
    """

    idiosyncratic_values: np.ndarray
    prior_means: np.ndarray
    realized_values: np.ndarray

    def __post_init__(self):
        for name in ("idiosyncratic_values", "prior_means", "realized_values"):
            arr = np.asarray(getattr(self, name), dtype=float)
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        n = self.idiosyncratic_values.shape[0]
        if self.prior_means.shape != (n,) or self.realized_values.shape != (n,):
            raise ValueError("ground-truth vectors must share one length")


@dataclass(frozen=True)
class Population:
    """One draw of the common-value vector plus the users who share it."""

    common_values: np.ndarray
    users: tuple[UserGroundTruth, ...]
    population_id: int
    seed: int

    def __post_init__(self):
        arr = np.asarray(self.common_values, dtype=float)
        arr.flags.writeable = False
        object.__setattr__(self, "common_values", arr)
        object.__setattr__(self, "users", tuple(self.users))
        if not self.users:
            raise ValueError("a population needs at least one user")


def circular_distance(n: int, m: int, n_items: int) -> int:
    """Shortest hop count between items n and m on a ring of n_items."""
    if not (0 <= n < n_items and 0 <= m < n_items):
        raise ValueError(f"item indices ({n}, {m}) out of range for n_items={n_items}")
    gap = abs(m - n)
    return min(gap, n_items - gap)


def circular_distances(a: np.ndarray, b: np.ndarray, n_items: int) -> np.ndarray:
    """Elementwise ring distance for index arrays."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.size and (min(a.min(), b.min()) < 0 or max(a.max(), b.max()) >= n_items):
        raise ValueError(f"item indices out of range for n_items={n_items}")
    gap = np.abs(b - a)
    return np.minimum(gap, n_items - gap)


@lru_cache(maxsize=32)
def _correlation_kernel(rho: float, n_items: int) -> np.ndarray:
    """Unit-variance ring kernel rho^d(n, m); cached read-only."""
    idx = np.arange(n_items)
    gap = np.abs(idx[:, None] - idx[None, :])
    dist = np.minimum(gap, n_items - gap)
    kernel = np.asarray(rho, dtype=float) ** dist
    kernel.flags.writeable = False
    return kernel


@lru_cache(maxsize=32)
def _sampling_factor(rho: float, n_items: int) -> np.ndarray:
    """Symmetric square root of the unit kernel, for drawing correlated fields.

    Built from an eigendecomposition with tiny negative eigenvalues clamped
    to zero; the kernel is near-singular at high rho and large N.
    """
    kernel = _correlation_kernel(rho, n_items)
    eigenvalues, eigenvectors = np.linalg.eigh(kernel)
    if eigenvalues.min() < -EIGENVALUE_SLACK:
        raise NumericalError(
            f"ring kernel (rho={rho}, N={n_items}) has eigenvalue "
            f"{eigenvalues.min():.3e} below -{EIGENVALUE_SLACK:.0e}"
        )
    factor = eigenvectors * np.sqrt(np.clip(eigenvalues, 0.0, None))
    factor.flags.writeable = False
    return factor


def build_covariance(scale_sq: float, rho: float, n_items: int) -> np.ndarray:
    """Covariance matrix with entries scale_sq * rho^d(n, m) on the ring."""
    if scale_sq <= 0:
        raise ValueError(f"scale_sq must be > 0, got {scale_sq}")
    if not 0.0 <= rho < 1.0:
        raise ValueError(f"rho must lie in [0, 1), got {rho}")
    if n_items <= 0:
        raise ValueError(f"n_items must be positive, got {n_items}")
    return scale_sq * _correlation_kernel(float(rho), int(n_items))


def sample_population(
    params: ModelParams,
    users_per_population: int,
    seed: int,
    population_id: int = 0,
) -> Population:
    """Draw one population's ground truth, deterministically from seed.

    One common-value field is shared by all users; each user gets i.i.d.
    prior means (spread sigma_bar), an idiosyncratic field centred on those
    priors, and realized values idio + beta * common. Per-user draws come
    from per-user derived streams, so user u's truth does not depend on how
    many users are sampled.
    """
    if users_per_population <= 0:
        raise ValueError(f"users_per_population must be positive, got {users_per_population}")
    n = params.n_items
    factor = _sampling_factor(float(params.rho), n)

    common_rng = np.random.default_rng(derive_seed(seed, ["common"]))
    common = params.sigma * (factor @ common_rng.standard_normal(n))

    z_prior = np.empty((users_per_population, n))
    z_idio = np.empty((users_per_population, n))
    for u in range(users_per_population):
        rng = np.random.default_rng(derive_seed(seed, ["user", u]))
        z_prior[u] = rng.standard_normal(n)
        z_idio[u] = rng.standard_normal(n)
    priors = params.sigma_bar * z_prior
    # One GEMM for all users' correlated fields instead of a matvec per user.
    idios = priors + params.sigma_i * (z_idio @ factor.T)
    realized = idios + params.beta * common
    users = tuple(
        UserGroundTruth(idios[u], priors[u], realized[u])
        for u in range(users_per_population)
    )
    return Population(common, users, population_id, seed)


def write_population_csv(population: Population, stream: IO[str]) -> None:
    """Debug dump of a population's ground truth as CSV rows."""
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["user_id", "item", "v_common", "v_idio", "prior_mean", "realized"])
    for user_id, user in enumerate(population.users):
        for item in range(population.common_values.shape[0]):
            writer.writerow(
                [
                    user_id,
                    item,
                    repr(float(population.common_values[item])),
                    repr(float(user.idiosyncratic_values[item])),
                    repr(float(user.prior_means[item])),
                    repr(float(user.realized_values[item])),
                ]
            )
