"""Parameter sweep orchestration.

Enumerates the (gamma, sigma, rho, beta) grid, simulates every population,
user, and regime with hierarchically derived seeds, and materializes the
run as CSV files. The engine only produces raw trajectory records;
aggregation is delegated to the metrics module so that re-aggregating an
existing run gives byte-identical tables.

Parallelism unit is one (grid point, population): big enough to amortize
kernel construction, small enough to spread across workers. Each grid
point is persisted as one shard file written atomically, so an
interrupted sweep resumes by skipping finished shards.
"""

from __future__ import annotations

import dataclasses
import json
import math
import os
import shutil
import warnings
from concurrent.futures import FIRST_COMPLETED, ProcessPoolExecutor, wait
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import NamedTuple

import numpy as np
import pandas as pd

from . import metrics
from ._version import __version__
from .beliefs import REGIMES
from .errors import ConfigError, InvariantError
from .policy import run_trajectory
from .product_space import ModelParams, circular_distances, sample_population
from .seeding import derive_seed

TRAJECTORY_COLUMNS = [
    "grid_id",
    "gamma",
    "sigma",
    "rho",
    "beta",
    "population_id",
    "user_id",
    "regime",
    "t",
    "item",
    "realized_value",
    "distance_from_prev",
    "certainty_equivalent_at_choice",
]

# Above this many trajectories a sweep is flagged before it starts.
WORK_WARNING_TRAJECTORIES = 1_000_000

_REGIME_RANK = {name: i for i, name in enumerate(REGIMES)}


class WorkEstimateWarning(UserWarning):
    """Raised (as a warning) when a sweep is large enough to take hours."""


class GridPoint(NamedTuple):
    grid_id: int
    gamma: float
    sigma: float
    rho: float
    beta: float


@dataclass(frozen=True)
class SweepConfig:
    """Full description of a sweep; defaults give the desk-scale run."""

    master_seed: int = 456
    n_items: int = 200
    horizon: int = 20
    populations: int = 20
    users_per_population: int = 50
    gamma_grid: tuple[float, ...] = (0.0, 1.0, 5.0)
    sigma_grid: tuple[float, ...] = (1.0,)
    rho_grid: tuple[float, ...] = (0.0, 0.5, 0.9)
    beta_grid: tuple[float, ...] = (0.0, 1.0, 5.0)
    sigma_bar: float = 1.0
    regimes: tuple[str, ...] = tuple(REGIMES)
    output_dir: str = "runs/desk"

    def validate(self) -> None:
        def fail(key: str, why: str) -> None:
            raise ConfigError(f"invalid value for '{key}': {why}")

        if not isinstance(self.master_seed, int) or isinstance(self.master_seed, bool):
            fail("master_seed", "must be an integer")
        if not 0 <= self.master_seed < 2**64:
            fail("master_seed", "must fit in 64 unsigned bits")
        for key in ("n_items", "horizon", "populations", "users_per_population"):
            value = getattr(self, key)
            if not isinstance(value, int) or isinstance(value, bool) or value < 1:
                fail(key, "must be a positive integer")
        if self.horizon > self.n_items:
            fail("horizon", f"cannot exceed n_items ({self.n_items})")
        if self.users_per_population < 2:
            fail("users_per_population", "needs at least 2 users for pairwise metrics")
        for key, low_ok in (("gamma_grid", True), ("beta_grid", True)):
            grid = getattr(self, key)
            if len(grid) == 0:
                fail(key, "grid is empty")
            for value in grid:
                if not math.isfinite(value) or value < 0:
                    fail(key, f"value {value!r} must be finite and >= 0")
        if len(self.sigma_grid) == 0:
            fail("sigma_grid", "grid is empty")
        for value in self.sigma_grid:
            if not math.isfinite(value) or value <= 0:
                fail("sigma_grid", f"value {value!r} must be finite and > 0")
        if len(self.rho_grid) == 0:
            fail("rho_grid", "grid is empty")
        for value in self.rho_grid:
            if not math.isfinite(value) or not 0 <= value < 1:
                fail("rho_grid", f"value {value!r} must lie in [0, 1)")
        if not math.isfinite(self.sigma_bar) or self.sigma_bar <= 0:
            fail("sigma_bar", "must be finite and > 0")
        if len(self.regimes) == 0:
            fail("regimes", "at least one regime is required")
        for regime in self.regimes:
            if regime not in REGIMES:
                fail("regimes", f"unknown regime {regime!r} (choose from {', '.join(REGIMES)})")
        if len(set(self.regimes)) != len(self.regimes):
            fail("regimes", "regimes are duplicated")
        if not self.output_dir:
            fail("output_dir", "must be a non-empty path")

    @property
    def ordered_regimes(self) -> tuple[str, ...]:
        return tuple(sorted(self.regimes, key=_REGIME_RANK.get))

    def grid(self) -> list[GridPoint]:
        """Row-major enumeration: gamma slowest, then sigma, rho, beta."""
        points = []
        for gamma in self.gamma_grid:
            for sigma in self.sigma_grid:
                for rho in self.rho_grid:
                    for beta in self.beta_grid:
                        points.append(
                            GridPoint(len(points), float(gamma), float(sigma), float(rho), float(beta))
                        )
        return points

    def trajectory_count(self) -> int:
        grid_size = (
            len(self.gamma_grid) * len(self.sigma_grid) * len(self.rho_grid) * len(self.beta_grid)
        )
        return grid_size * self.populations * self.users_per_population * len(self.regimes)


def paper_config(output_dir: str = "runs/paper") -> SweepConfig:
    """The full published grid: 900 points at 100 populations x 100 users."""
    return SweepConfig(
        populations=100,
        users_per_population=100,
        gamma_grid=(0.0, 0.3, 0.6, 1.0, 5.0),
        sigma_grid=(0.25, 0.5, 1.0, 2.0, 4.0),
        rho_grid=(0.0, 0.1, 0.3, 0.5, 0.7, 0.9),
        beta_grid=(0.0, 0.4, 0.8, 1.0, 2.0, 5.0),
        output_dir=output_dir,
    )


@dataclass(frozen=True)
class RunDataset:
    """All tables produced by one sweep, plus the manifest echo."""

    trajectory_records: pd.DataFrame
    per_user_metrics: pd.DataFrame
    per_period_metrics: pd.DataFrame
    homogeneity_records: pd.DataFrame
    correlations: pd.DataFrame
    pooled_metrics: pd.DataFrame
    summary: pd.DataFrame
    manifest: dict


def _simulate_unit(config: SweepConfig, point: GridPoint, population_id: int) -> dict:
    """Simulate one (grid point, population): every user under every regime.

    Returns plain arrays rather than a DataFrame to keep inter-process
    payloads small.
    """
    params = ModelParams(
        n_items=config.n_items,
        horizon=config.horizon,
        gamma=point.gamma,
        sigma=point.sigma,
        rho=point.rho,
        beta=point.beta,
        sigma_bar=config.sigma_bar,
    )
    pop_seed = derive_seed(config.master_seed, ["population", point.grid_id, population_id])
    population = sample_population(
        params, config.users_per_population, seed=pop_seed, population_id=population_id
    )

    regimes = list(config.ordered_regimes)
    horizon = config.horizon
    n_traj = config.users_per_population * len(regimes)
    user_col = np.empty(n_traj * horizon, dtype=np.int64)
    regime_col = np.empty(n_traj, dtype=np.int64)
    item_col = np.empty(n_traj * horizon, dtype=np.int64)
    value_col = np.empty(n_traj * horizon, dtype=np.float64)
    dist_col = np.empty(n_traj * horizon, dtype=np.float64)
    ce_col = np.empty(n_traj * horizon, dtype=np.float64)

    row = 0
    for user_id, user in enumerate(population.users):
        tie_seed = derive_seed(
            config.master_seed, ["ties", point.grid_id, population_id, user_id]
        )
        for r_idx, regime in enumerate(regimes):
            traj = run_trajectory(
                user,
                population.common_values,
                params,
                regime,
                seed=tie_seed,
                user_id=user_id,
                population_id=population_id,
            )
            sl = slice(row * horizon, (row + 1) * horizon)
            user_col[sl] = user_id
            regime_col[row] = r_idx
            item_col[sl] = traj.items
            value_col[sl] = traj.realized
            dist_col[sl.start] = np.nan
            dist_col[sl.start + 1 : sl.stop] = circular_distances(
                traj.items[:-1], traj.items[1:], config.n_items
            )
            ce_col[sl] = traj.certainty_equivalents
            row += 1

    return {
        "population_id": population_id,
        "regime_names": regimes,
        "user": user_col,
        "regime": regime_col,
        "item": item_col,
        "realized": value_col,
        "distance": dist_col,
        "ce": ce_col,
    }


def _shard_frame(config: SweepConfig, point: GridPoint, units: list[dict]) -> pd.DataFrame:
    """Assemble one grid point's shard, ordered by population, user, regime, t."""
    units = sorted(units, key=lambda u: u["population_id"])
    horizon = config.horizon
    parts = []
    for unit in units:
        n_rows = unit["item"].size
        n_traj = n_rows // horizon
        parts.append(
            pd.DataFrame(
                {
                    "grid_id": np.full(n_rows, point.grid_id, dtype=np.int64),
                    "gamma": np.full(n_rows, point.gamma),
                    "sigma": np.full(n_rows, point.sigma),
                    "rho": np.full(n_rows, point.rho),
                    "beta": np.full(n_rows, point.beta),
                    "population_id": np.full(n_rows, unit["population_id"], dtype=np.int64),
                    "user_id": unit["user"],
                    "regime": np.repeat(
                        np.array([unit["regime_names"][i] for i in unit["regime"]], dtype=object),
                        horizon,
                    ),
                    "t": np.tile(np.arange(1, horizon + 1, dtype=np.int64), n_traj),
                    "item": unit["item"],
                    "realized_value": unit["realized"],
                    "distance_from_prev": unit["distance"],
                    "certainty_equivalent_at_choice": unit["ce"],
                }
            )
        )
    return pd.concat(parts, ignore_index=True)[TRAJECTORY_COLUMNS]


def _atomic_write_csv(frame: pd.DataFrame, path: Path) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    frame.to_csv(tmp, index=False)
    os.replace(tmp, path)


def _shard_path(out_dir: Path, grid_id: int) -> Path:
    return out_dir / "shards" / f"grid_{grid_id:04d}.csv"


def _concat_shards(out_dir: Path, grid_ids: list[int]) -> Path:
    """Build trajectories.csv by splicing shard bodies in grid order."""
    target = out_dir / "trajectories.csv"
    tmp = target.with_suffix(".csv.tmp")
    with open(tmp, "wb") as sink:
        sink.write((",".join(TRAJECTORY_COLUMNS) + "\n").encode())
        for grid_id in grid_ids:
            with open(_shard_path(out_dir, grid_id), "rb") as shard:
                shard.readline()
                shutil.copyfileobj(shard, sink)
    os.replace(tmp, target)
    return target


def read_trajectories(path: Path | str) -> pd.DataFrame:
    """Read a trajectory table back with exact float round-tripping."""
    df = pd.read_csv(path, float_precision="round_trip")
    missing = [c for c in TRAJECTORY_COLUMNS if c not in df.columns]
    if missing:
        raise InvariantError(f"trajectory table is missing columns: {', '.join(missing)}")
    return df


def aggregate_tables(df: pd.DataFrame, n_items: int) -> dict[str, pd.DataFrame]:
    """All derived tables for a trajectory table, keyed by artifact name."""
    per_user = metrics.per_user_table(df, n_items)
    homog = metrics.homogeneity_table(df, n_items)
    return {
        "per_user_metrics": per_user,
        "per_period_metrics": metrics.per_period_table(df),
        "homogeneity": homog,
        "correlations": metrics.correlations_table(per_user),
        "pooled_metrics": metrics.pooled_table(df, per_user, homog),
        "summary": metrics.summary_table(df, per_user, homog),
    }


def write_metric_tables(out_dir: Path, tables: dict[str, pd.DataFrame]) -> None:
    for name in ("per_user_metrics", "per_period_metrics", "homogeneity", "correlations", "pooled_metrics"):
        _atomic_write_csv(tables[name], out_dir / f"{name}.csv")


def _write_manifest(out_dir: Path, config: SweepConfig, grid: list[GridPoint], row_counts: dict) -> dict:
    manifest = {
        "format_version": 1,
        "package_version": __version__,
        "created_utc": datetime.now(timezone.utc).isoformat(),
        "master_seed": config.master_seed,
        "config": dataclasses.asdict(config),
        "grid": [point._asdict() for point in grid],
        "row_counts": row_counts,
    }
    tmp = out_dir / "manifest.json.tmp"
    tmp.write_text(json.dumps(manifest, indent=2) + "\n")
    os.replace(tmp, out_dir / "manifest.json")
    return manifest


def run_sweep(config: SweepConfig, workers: int | None = None) -> RunDataset:
    """Execute a sweep end to end and write all artifacts to output_dir.

    Existing complete shards are reused, so rerunning after an
    interruption only computes what is missing. Output bytes are
    independent of worker count and completion order.
    """
    config.validate()
    total = config.trajectory_count()
    if total > WORK_WARNING_TRAJECTORIES:
        warnings.warn(
            f"sweep will simulate {total:,} trajectories; consider the desk-scale "
            "defaults or a coarser grid for interactive work",
            WorkEstimateWarning,
            stacklevel=2,
        )

    out_dir = Path(config.output_dir)
    (out_dir / "shards").mkdir(parents=True, exist_ok=True)
    grid = config.grid()

    pending = [point for point in grid if not _shard_path(out_dir, point.grid_id).exists()]
    if workers is None:
        workers = os.cpu_count() or 1
    if workers <= 1:
        for point in pending:
            units = [_simulate_unit(config, point, pop) for pop in range(config.populations)]
            _atomic_write_csv(_shard_frame(config, point, units), _shard_path(out_dir, point.grid_id))
    else:
        _run_parallel(config, pending, out_dir, workers)

    _concat_shards(out_dir, [point.grid_id for point in grid])
    df = read_trajectories(out_dir / "trajectories.csv")
    expected = total * config.horizon
    if len(df) != expected:
        raise InvariantError(
            f"trajectory table has {len(df)} rows, expected {expected}; "
            "delete stale shards in the output directory and rerun"
        )

    tables = aggregate_tables(df, config.n_items)
    write_metric_tables(out_dir, tables)
    row_counts = {"trajectories": len(df)}
    row_counts.update({name: len(t) for name, t in tables.items() if name != "summary"})
    manifest = _write_manifest(out_dir, config, grid, row_counts)
    return RunDataset(
        trajectory_records=df,
        per_user_metrics=tables["per_user_metrics"],
        per_period_metrics=tables["per_period_metrics"],
        homogeneity_records=tables["homogeneity"],
        correlations=tables["correlations"],
        pooled_metrics=tables["pooled_metrics"],
        summary=tables["summary"],
        manifest=manifest,
    )


def _run_parallel(config: SweepConfig, pending: list[GridPoint], out_dir: Path, workers: int) -> None:
    """Fan (grid point, population) units across processes, at most
    ~2 units in flight per worker to bound result memory."""
    points_by_id = {point.grid_id: point for point in pending}
    units_done: dict[int, list[dict]] = {gid: [] for gid in points_by_id}
    queue = [(point, pop) for point in pending for pop in range(config.populations)]
    max_inflight = 2 * workers
    with ProcessPoolExecutor(max_workers=workers) as pool:
        inflight = {}
        cursor = 0
        while cursor < len(queue) or inflight:
            while cursor < len(queue) and len(inflight) < max_inflight:
                point, pop = queue[cursor]
                inflight[pool.submit(_simulate_unit, config, point, pop)] = point.grid_id
                cursor += 1
            done, _ = wait(inflight, return_when=FIRST_COMPLETED)
            for future in done:
                grid_id = inflight.pop(future)
                units_done[grid_id].append(future.result())
                if len(units_done[grid_id]) == config.populations:
                    frame = _shard_frame(config, points_by_id[grid_id], units_done.pop(grid_id))
                    _atomic_write_csv(frame, _shard_path(out_dir, grid_id))
