"""Per-period choice rule and full-trajectory rollout.

Users are myopic: each period they consume the remaining item with the
highest certainty equivalent under their current belief, observe its
realized value, and condition their belief on it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .beliefs import REGIMES, BeliefState, condition_on_observation, init_beliefs
from .product_space import ModelParams, UserGroundTruth

# Certainty equivalents closer than this are indistinguishable ties,
# broken uniformly at random; below accumulated conditioning noise.
TIE_TOLERANCE = 1e-12


@dataclass(frozen=True)
class Trajectory:
    """The ordered items one user consumed under one regime."""

    regime: str
    items: np.ndarray
    realized: np.ndarray
    certainty_equivalents: np.ndarray
    user_id: int = 0
    population_id: int = 0

    def __post_init__(self):
        for name in ("items", "realized", "certainty_equivalents"):
            arr = np.asarray(getattr(self, name))
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        if np.unique(self.items).size != self.items.size:
            raise ValueError("consumed items must be distinct")
        if not (self.items.shape == self.realized.shape == self.certainty_equivalents.shape):
            raise ValueError("trajectory arrays must share one length")

    @property
    def horizon(self) -> int:
        return int(self.items.size)


def choose_next(state: BeliefState, gamma: float, tie_rng: np.random.Generator) -> int:
    """Item with the highest certainty equivalent; near-ties drawn uniformly."""
    if state.remaining.size == 0:
        raise ValueError("no items remain to choose from")
    deltas = state.mean - 0.5 * gamma * np.diagonal(state.cov)
    candidates = np.flatnonzero(deltas >= deltas.max() - TIE_TOLERANCE)
    if candidates.size == 1:
        pos = candidates[0]
    else:
        pos = candidates[tie_rng.integers(candidates.size)]
    return int(state.remaining[pos])


def run_trajectory(
    user: UserGroundTruth,
    common_values: np.ndarray,
    params: ModelParams,
    regime: str,
    seed: int,
    user_id: int = 0,
    population_id: int = 0,
) -> Trajectory:
    """Roll out horizon myopic choices for one (user, regime) pair.

    The tie-break stream is seeded from `seed` alone, so running different
    regimes with the same seed keeps their choices paired: whenever two
    regimes face identical near-ties they resolve them identically.
    """
    if regime not in REGIMES:
        raise ValueError(f"unknown regime {regime!r}; expected one of {REGIMES}")
    tie_rng = np.random.default_rng(seed)
    state = init_beliefs(user, common_values, params, regime)

    horizon = params.horizon
    items = np.empty(horizon, dtype=int)
    realized = np.empty(horizon)
    ces = np.empty(horizon)
    for t in range(horizon):
        item = choose_next(state, params.gamma, tie_rng)
        pos = state.position(item)
        items[t] = item
        ces[t] = state.mean[pos] - 0.5 * params.gamma * state.cov[pos, pos]
        realized[t] = user.realized_values[item]
        state = condition_on_observation(state, item, realized[t])
    return Trajectory(
        regime=regime,
        items=items,
        realized=realized,
        certainty_equivalents=ces,
        user_id=user_id,
        population_id=population_id,
    )
