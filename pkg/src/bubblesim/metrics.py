"""Consumption metrics and their sweep-level aggregation.

Per-trajectory operations (distance paths, diversity, welfare) and
population-level ones (homogeneity, correlations) plus the builders that
turn a raw trajectory table into the published CSV tables. Aggregation
lives here, not in the engine: the engine only materializes raw records.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .policy import Trajectory
from .product_space import circular_distances

GRID_KEYS = ["grid_id", "gamma", "sigma", "rho", "beta"]

# Canonical regime ordering for outputs (matches beliefs.REGIMES).
_REGIME_ORDER = {"no_recommendation": 0, "recommendation": 1, "oracle": 2}


@dataclass(frozen=True)
class MetricRecord:
    """A mean with its 95% normal-approximation confidence half-width."""

    value: float
    ci_half_width: float
    n: int
    keys: dict = field(default_factory=dict)


def consecutive_distance_series(traj: Trajectory, n_items: int) -> np.ndarray:
    """Ring distance between each consecutive pair of consumed items."""
    if traj.horizon < 2:
        raise ValueError("need at least two consumed items for a distance series")
    return circular_distances(traj.items[:-1], traj.items[1:], n_items).astype(float)


def diversity(traj: Trajectory, n_items: int) -> float:
    """Mean pairwise ring distance of the consumed set, normalized by N.

    Averages over ordered pairs (divisor T*(T-1)), which equals the
    unordered mean; ranges from 1/N (adjacent pair) to 1/2 (antipodal).
    """
    if traj.horizon < 2:
        raise ValueError("diversity needs at least two consumed items")
    items = traj.items
    gap = np.abs(items[:, None] - items[None, :])
    dist = np.minimum(gap, n_items - gap)
    t = items.size
    return float(dist.sum() / (t * (t - 1)) / n_items)


def welfare(traj: Trajectory) -> float:
    """Mean realized value of the consumed items."""
    if traj.horizon < 1:
        raise ValueError("welfare needs at least one consumed item")
    return float(traj.realized.mean())


def jaccard(a: set, b: set) -> float:
    """|a ∩ b| / |a ∪ b| for non-empty item sets."""
    if not a and not b:
        raise ValueError("jaccard of two empty sets is undefined")
    return len(a & b) / len(a | b)


def homogeneity(trajs: list[Trajectory]) -> float:
    """Mean pairwise Jaccard index of users' consumed item sets."""
    if len(trajs) < 2:
        raise ValueError("homogeneity needs at least two users")
    sets = [set(map(int, t.items)) for t in trajs]
    total = 0.0
    pairs = 0
    for i in range(len(sets)):
        for j in range(i + 1, len(sets)):
            total += jaccard(sets[i], sets[j])
            pairs += 1
    return total / pairs


def recommendation_value(traj_rec: Trajectory, traj_norec: Trajectory) -> float:
    """Welfare gain of the recommendation run over the paired baseline run."""
    if (traj_rec.user_id, traj_rec.population_id) != (
        traj_norec.user_id,
        traj_norec.population_id,
    ):
        raise ValueError("recommendation value compares trajectories of one user")
    return welfare(traj_rec) - welfare(traj_norec)


def aggregate_with_ci(values) -> MetricRecord:
    """Sample mean with a 1.96 * SE half-width (0 when n < 2)."""
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        raise ValueError("cannot aggregate an empty sample")
    if arr.size < 2:
        return MetricRecord(float(arr[0]), 0.0, 1)
    half = 1.96 * arr.std(ddof=1) / math.sqrt(arr.size)
    return MetricRecord(float(arr.mean()), float(half), int(arr.size))


def pearson_correlation(x, y) -> float:
    """Sample Pearson coefficient; errors on zero variance."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.size < 2:
        raise ValueError("need two equal-length samples of size >= 2")
    xc = x - x.mean()
    yc = y - y.mean()
    denom = math.sqrt((xc * xc).sum() * (yc * yc).sum())
    if denom == 0.0:
        raise ValueError("correlation undefined: an input has zero variance")
    return float((xc * yc).sum() / denom)


# ---------------------------------------------------------------------------
# Table builders over the raw trajectory table.
#
# The trajectory table has one row per (grid point, population, user, regime,
# period) with columns grid_id, gamma, sigma, rho, beta, population_id,
# user_id, regime, t, item, realized_value, distance_from_prev,
# certainty_equivalent_at_choice.
# ---------------------------------------------------------------------------


def _sorted_trajectories(df: pd.DataFrame) -> pd.DataFrame:
    order = df["regime"].map(_REGIME_ORDER)
    return (
        df.assign(_regime_order=order)
        .sort_values(
            ["grid_id", "population_id", "user_id", "_regime_order", "t"],
            kind="mergesort",
        )
        .drop(columns="_regime_order")
        .reset_index(drop=True)
    )


def _trajectory_blocks(df: pd.DataFrame) -> tuple[pd.DataFrame, np.ndarray, np.ndarray]:
    """Reshape the long table into per-trajectory keys, items, realized."""
    horizon = int(df["t"].max())
    if len(df) % horizon != 0:
        raise ValueError("trajectory table length is not a multiple of the horizon")
    tidy = _sorted_trajectories(df)
    items = tidy["item"].to_numpy().reshape(-1, horizon)
    realized = tidy["realized_value"].to_numpy().reshape(-1, horizon)
    keys = tidy.iloc[::horizon][GRID_KEYS + ["population_id", "user_id", "regime"]]
    return keys.reset_index(drop=True), items, realized


def _diversity_block(items: np.ndarray, n_items: int) -> np.ndarray:
    n_traj, horizon = items.shape
    out = np.empty(n_traj)
    chunk = max(1, 4_000_000 // (horizon * horizon))
    for lo in range(0, n_traj, chunk):
        block = items[lo : lo + chunk]
        gap = np.abs(block[:, :, None] - block[:, None, :])
        dist = np.minimum(gap, n_items - gap)
        out[lo : lo + chunk] = dist.sum(axis=(1, 2)) / (horizon * (horizon - 1)) / n_items
    return out


def per_user_table(df: pd.DataFrame, n_items: int) -> pd.DataFrame:
    """Diversity, welfare, and paired recommendation value per trajectory.

    rec_value is filled on recommendation rows whose user also ran the
    no_recommendation regime, and left empty elsewhere.
    """
    keys, items, realized = _trajectory_blocks(df)
    out = keys.copy()
    out["diversity"] = _diversity_block(items, n_items)
    out["welfare"] = realized.mean(axis=1)

    pair_keys = ["grid_id", "population_id", "user_id"]
    rec = out[out["regime"] == "recommendation"][pair_keys + ["welfare"]]
    base = out[out["regime"] == "no_recommendation"][pair_keys + ["welfare"]]
    gains = rec.merge(base, on=pair_keys, suffixes=("_rec", "_base"))
    gains["rec_value"] = gains["welfare_rec"] - gains["welfare_base"]
    out = out.merge(gains[pair_keys + ["rec_value"]], on=pair_keys, how="left")
    out.loc[out["regime"] != "recommendation", "rec_value"] = np.nan
    return out[GRID_KEYS + ["population_id", "user_id", "regime", "diversity", "welfare", "rec_value"]]


def _mean_ci_n(frame: pd.DataFrame, by: list[str], column: str) -> pd.DataFrame:
    grouped = frame.groupby(by, sort=True)[column].agg(["mean", "std", "count"])
    grouped["ci_half_width"] = np.where(
        grouped["count"] >= 2,
        1.96 * grouped["std"].fillna(0.0) / np.sqrt(grouped["count"]),
        0.0,
    )
    grouped = grouped.rename(columns={"mean": "_mean", "count": "n"})
    return grouped.reset_index().drop(columns="std")


def per_period_table(df: pd.DataFrame) -> pd.DataFrame:
    """Mean consecutive distance with CI per grid point, regime, and period."""
    moved = df[df["t"] >= 2]
    stats = _mean_ci_n(moved, GRID_KEYS + ["regime", "t"], "distance_from_prev")
    stats = stats.rename(columns={"_mean": "mean_distance"})
    stats["_r"] = stats["regime"].map(_REGIME_ORDER)
    stats = stats.sort_values(["grid_id", "_r", "t"], kind="mergesort").drop(columns="_r")
    return stats.reset_index(drop=True)[GRID_KEYS + ["regime", "t", "mean_distance", "ci_half_width", "n"]]


def _jaccard_matrix_mean(items: np.ndarray, n_items: int) -> float:
    """Mean pairwise Jaccard over rows of an items matrix (vectorized)."""
    n_users, horizon = items.shape
    member = np.zeros((n_users, n_items), dtype=bool)
    member[np.arange(n_users)[:, None], items] = True
    inter = (member.astype(np.int32) @ member.astype(np.int32).T).astype(float)
    union = 2 * horizon - inter
    ratio = inter / union
    off_diag_sum = ratio.sum() - np.trace(ratio)
    return float(off_diag_sum / (n_users * (n_users - 1)))


def homogeneity_table(df: pd.DataFrame, n_items: int) -> pd.DataFrame:
    """Mean pairwise Jaccard of consumed sets per (grid point, regime, population)."""
    keys, items, _ = _trajectory_blocks(df)
    rows = []
    group_cols = GRID_KEYS + ["regime", "population_id"]
    for group, idx in keys.groupby(group_cols, sort=True).indices.items():
        value = _jaccard_matrix_mean(items[idx], n_items)
        rows.append(dict(zip(group_cols, group)) | {"homogeneity": value})
    out = pd.DataFrame(rows)
    order = out["regime"].map(_REGIME_ORDER)
    out = out.assign(_r=order).sort_values(["grid_id", "_r", "population_id"], kind="mergesort")
    return out.drop(columns="_r").reset_index(drop=True)[group_cols + ["homogeneity"]]


def correlations_table(per_user: pd.DataFrame) -> pd.DataFrame:
    """Diversity-welfare Pearson correlations across users.

    Emits one row per (grid point, regime) plus pooled rows (pooled=True,
    grid keys other than gamma left empty) that pool users over every
    other parameter for each (gamma, regime), matching how the scatter
    panels group results.
    """
    rows = []
    for key, group in per_user.groupby(GRID_KEYS + ["regime"], sort=True):
        rows.append(_correlation_row(dict(zip(GRID_KEYS + ["regime"], key)), group, pooled=False))
    for key, group in per_user.groupby(["gamma", "regime"], sort=True):
        keys = dict(zip(["gamma", "regime"], key))
        keys |= {"grid_id": np.nan, "sigma": np.nan, "rho": np.nan, "beta": np.nan}
        rows.append(_correlation_row(keys, group, pooled=True))
    out = pd.DataFrame(rows)
    out["grid_id"] = out["grid_id"].astype("Int64")
    out["_r"] = out["regime"].map(_REGIME_ORDER)
    out = out.sort_values(["pooled", "grid_id", "gamma", "_r"], kind="mergesort").drop(columns="_r")
    return out.reset_index(drop=True)[["pooled"] + GRID_KEYS + ["regime", "pearson_r", "n"]]


def _correlation_row(keys: dict, group: pd.DataFrame, pooled: bool) -> dict:
    try:
        r = pearson_correlation(group["diversity"].to_numpy(), group["welfare"].to_numpy())
    except ValueError:
        r = np.nan
    return keys | {"pooled": pooled, "pearson_r": r, "n": len(group)}


def pooled_table(
    df: pd.DataFrame, per_user: pd.DataFrame, homog: pd.DataFrame
) -> pd.DataFrame:
    """One-parameter pooled views: vary one grid key, pool over the others.

    Rows carry metric in {consecutive_distance, diversity, welfare,
    homogeneity}, the varied key (rho, gamma, beta, or rho_band with values
    "zero"/"positive"), regime, the period t for path metrics, and
    mean/ci_half_width/n. This table is the statistics source for the
    figure layer, which only filters and pivots.
    """
    moved = df[df["t"] >= 2]
    rows: list[pd.DataFrame] = []

    def add(frame, by_key, by_value_col, metric, column, with_t):
        by = [by_value_col, "regime"] + (["t"] if with_t else [])
        stats = _mean_ci_n(frame, by, column)
        stats = stats.rename(columns={"_mean": "mean", by_value_col: "group_value"})
        stats["metric"] = metric
        stats["group_key"] = by_key
        if not with_t:
            stats["t"] = np.nan
        rows.append(stats)

    for key in ("rho", "gamma"):
        add(moved, key, key, "consecutive_distance", "distance_from_prev", with_t=True)
        add(per_user, key, key, "diversity", "diversity", with_t=False)
        add(per_user, key, key, "welfare", "welfare", with_t=False)
    banded = moved.assign(rho_band=np.where(moved["rho"] > 0, "positive", "zero"))
    add(banded, "rho_band", "rho_band", "consecutive_distance", "distance_from_prev", with_t=True)
    for key in ("beta", "rho"):
        add(homog, key, key, "homogeneity", "homogeneity", with_t=False)

    out = pd.concat(rows, ignore_index=True)
    out["t"] = out["t"].astype("Int64")
    out["_r"] = out["regime"].map(_REGIME_ORDER)
    out = out.sort_values(
        ["metric", "group_key", "group_value", "_r", "t"], kind="mergesort"
    ).drop(columns="_r")
    columns = ["metric", "group_key", "group_value", "regime", "t", "mean", "ci_half_width", "n"]
    return out.reset_index(drop=True)[columns]


def summary_table(
    df: pd.DataFrame, per_user: pd.DataFrame, homog: pd.DataFrame
) -> pd.DataFrame:
    """Per-regime grand means with CIs, in canonical regime order.

    Distance, welfare, and diversity aggregate user-level values (one
    sample per trajectory); homogeneity aggregates population-level values.
    """
    user_distance = (
        df[df["t"] >= 2]
        .groupby(["regime", "grid_id", "population_id", "user_id"], sort=True)[
            "distance_from_prev"
        ]
        .mean()
        .reset_index()
    )
    rows = []
    for regime in sorted(per_user["regime"].unique(), key=_REGIME_ORDER.get):
        dist = aggregate_with_ci(
            user_distance.loc[user_distance["regime"] == regime, "distance_from_prev"]
        )
        welf = aggregate_with_ci(per_user.loc[per_user["regime"] == regime, "welfare"])
        divr = aggregate_with_ci(per_user.loc[per_user["regime"] == regime, "diversity"])
        hom = aggregate_with_ci(homog.loc[homog["regime"] == regime, "homogeneity"])
        rows.append(
            {
                "regime": regime,
                "n_users": welf.n,
                "mean_distance": dist.value,
                "distance_ci": dist.ci_half_width,
                "mean_welfare": welf.value,
                "welfare_ci": welf.ci_half_width,
                "mean_diversity": divr.value,
                "diversity_ci": divr.ci_half_width,
                "mean_homogeneity": hom.value,
                "homogeneity_ci": hom.ci_half_width,
            }
        )
    return pd.DataFrame(rows)
