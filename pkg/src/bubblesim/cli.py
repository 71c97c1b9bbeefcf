"""Command line entry point.

Subcommands:
  run             execute a sweep and write all artifacts
  aggregate       rebuild metric tables from an existing trajectories.csv
  estimate        print work size and a projected wall time for a config
  verify-example  check the package against the hand-computed 4-item example

Exit codes: 0 success, 1 internal invariant violation, 2 configuration
error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import engine
from ._version import __version__
from .beliefs import BeliefState, certainty_equivalent, condition_on_observation
from .engine import SweepConfig, paper_config
from .errors import ConfigError, InvariantError, NumericalError
from .product_space import build_covariance

_CONFIG_FIELDS = {f.name: f for f in dataclasses.fields(SweepConfig)}
_INT_KEYS = {"master_seed", "n_items", "horizon", "populations", "users_per_population"}
_FLOAT_KEYS = {"sigma_bar"}
_FLOAT_GRID_KEYS = {"gamma_grid", "sigma_grid", "rho_grid", "beta_grid"}


def parse_config_text(text: str, source: str = "<config>") -> dict[str, str]:
    """Parse flat key=value lines; blank lines and # comments are skipped."""
    pairs: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if not sep or not key:
            raise ConfigError(f"{source} line {lineno}: expected key=value, got {raw.strip()!r}")
        if key in pairs:
            raise ConfigError(f"{source} line {lineno}: duplicate key '{key}'")
        pairs[key] = value
    return pairs


def _coerce(key: str, value: str):
    if key in _INT_KEYS:
        return int(value)
    if key in _FLOAT_KEYS:
        return float(value)
    if key in _FLOAT_GRID_KEYS:
        return tuple(float(part.strip()) for part in value.split(","))
    if key == "regimes":
        return tuple(part.strip() for part in value.split(",") if part.strip())
    return value


def apply_settings(base: SweepConfig, pairs: dict[str, str]) -> SweepConfig:
    """Overlay raw key=value settings onto a config, with type coercion."""
    updates = {}
    for key, value in pairs.items():
        if key not in _CONFIG_FIELDS:
            known = ", ".join(sorted(_CONFIG_FIELDS))
            raise ConfigError(f"unknown config key '{key}' (known keys: {known})")
        try:
            updates[key] = _coerce(key, value)
        except ValueError:
            raise ConfigError(f"invalid value for '{key}': {value!r}") from None
    return dataclasses.replace(base, **updates)


def load_config_file(path: str) -> dict[str, str]:
    try:
        text = Path(path).read_text()
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    return parse_config_text(text, source=path)


def _build_config(args) -> SweepConfig:
    config = paper_config() if getattr(args, "paper", False) else SweepConfig()
    if args.config:
        config = apply_settings(config, load_config_file(args.config))
    overrides: dict[str, str] = {}
    for item in args.set or []:
        key, sep, value = item.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        overrides[key.strip()] = value.strip()
    config = apply_settings(config, overrides)
    if getattr(args, "out", None):
        config = dataclasses.replace(config, output_dir=args.out)
    config.validate()
    return config


# ---------------------------------------------------------------------------
# The hand-computed 4-item golden example.
#
# Four items on a ring, flat zero prior, sigma = 1, rho = 0.5. The user
# consumes item 0 and observes y. Conditioning gives posterior mean
# (rho*y, rho^2*y, rho*y) over items (1, 2, 3) and a posterior covariance
# with diagonal (3/4, 15/16, 3/4); risk aversion gamma = 4/3 is the
# indifference point between the safe neighbors and the far item when
# y = -1/2.
# ---------------------------------------------------------------------------

_EXPECTED_MEAN = np.array([0.25, 0.125, 0.25])
_EXPECTED_COV = np.array(
    [
        [0.75, 0.375, 0.0],
        [0.375, 0.9375, 0.375],
        [0.0, 0.375, 0.75],
    ]
)
_EXPECTED_THRESHOLD = 4.0 / 3.0
_TOLERANCE = 1e-12


def _example_posterior(y: float, rho: float) -> BeliefState:
    state = BeliefState(
        remaining=np.arange(4),
        mean=np.zeros(4),
        cov=build_covariance(1.0, rho, 4),
        consumed_count=0,
    )
    return condition_on_observation(state, item=0, observed=y)


def _best_items(state: BeliefState, gamma: float) -> set[int]:
    values = np.array([certainty_equivalent(state, item, gamma) for item in state.remaining])
    top = values.max()
    return {int(item) for item, v in zip(state.remaining, values) if top - v <= _TOLERANCE}


def verify_example(rho: float = 0.5) -> tuple[bool, list[str]]:
    """Run every golden check; returns overall pass and one line per check.

    Hermetic: touches no files. The rho parameter exists so tests can
    confirm the checks actually bite when the model is perturbed.
    """
    lines = []
    ok = True

    def check(name: str, computed, expected, passed: bool) -> None:
        nonlocal ok
        ok &= passed
        status = "PASS" if passed else "FAIL"
        lines.append(f"{status} {name}: computed={computed} expected={expected}")

    up = _example_posterior(0.5, rho)
    check(
        "posterior_mean",
        np.array2string(up.mean, precision=6),
        np.array2string(_EXPECTED_MEAN, precision=6),
        bool(np.max(np.abs(up.mean - _EXPECTED_MEAN)) <= _TOLERANCE),
    )
    check(
        "posterior_covariance",
        np.array2string(up.cov, precision=6),
        np.array2string(_EXPECTED_COV, precision=6),
        bool(np.max(np.abs(up.cov - _EXPECTED_COV)) <= _TOLERANCE),
    )

    down = _example_posterior(-0.5, rho)
    gap_mean = down.mean[1] - down.mean[0]
    gap_var = down.cov[1, 1] - down.cov[0, 0]
    threshold = 2.0 * gap_mean / gap_var
    check(
        "indifference_gamma",
        f"{threshold:.12g}",
        f"{_EXPECTED_THRESHOLD:.12g}",
        bool(abs(threshold - _EXPECTED_THRESHOLD) <= _TOLERANCE),
    )

    check("choice_y_pos_gamma_0", sorted(_best_items(up, 0.0)), [1, 3], _best_items(up, 0.0) == {1, 3})
    check("choice_y_pos_gamma_2", sorted(_best_items(up, 2.0)), [1, 3], _best_items(up, 2.0) == {1, 3})
    check("choice_y_neg_gamma_0", sorted(_best_items(down, 0.0)), [2], _best_items(down, 0.0) == {2})
    check("choice_y_neg_gamma_1", sorted(_best_items(down, 1.0)), [2], _best_items(down, 1.0) == {2})
    check("choice_y_neg_gamma_2", sorted(_best_items(down, 2.0)), [1, 3], _best_items(down, 2.0) == {1, 3})
    return ok, lines


# ---------------------------------------------------------------------------
# Work estimation.
# ---------------------------------------------------------------------------

_calibration_cache: dict[tuple, float] = {}


def _seconds_per_trajectory(config: SweepConfig) -> float:
    """Time a small batch of real trajectories; cached per problem size."""
    key = (config.n_items, config.horizon)
    if key not in _calibration_cache:
        probe = dataclasses.replace(config, populations=1, users_per_population=2)
        point = probe.grid()[0]
        done = 0
        start = time.perf_counter()
        while True:
            engine._simulate_unit(probe, point, population_id=done)
            done += 2 * len(probe.regimes)
            if time.perf_counter() - start >= 1.0 or done >= 600:
                break
        _calibration_cache[key] = (time.perf_counter() - start) / done
    return _calibration_cache[key]


def _cmd_estimate(args) -> int:
    config = _build_config(args)
    n_traj = config.trajectory_count()
    flops = n_traj * config.horizon * config.n_items**2
    per_traj = _seconds_per_trajectory(config)
    workers = args.workers or 1
    print("quantity,value")
    print(f"trajectories,{n_traj}")
    print(f"conditioning_flops,{flops:.3e}")
    print(f"seconds_per_trajectory,{per_traj:.6f}")
    print(f"workers,{workers}")
    print(f"projected_wall_seconds,{n_traj * per_traj / workers:.1f}")
    return 0


def _cmd_run(args) -> int:
    config = _build_config(args)
    dataset = engine.run_sweep(config, workers=args.workers)
    dataset.summary.to_csv(sys.stdout, index=False)
    return 0


def _cmd_aggregate(args) -> int:
    run_dir = Path(args.out)
    trajectories = run_dir / "trajectories.csv"
    if not trajectories.exists():
        raise ConfigError(f"no trajectories.csv under {run_dir}")
    df = engine.read_trajectories(trajectories)
    manifest_path = run_dir / "manifest.json"
    if manifest_path.exists():
        n_items = int(json.loads(manifest_path.read_text())["config"]["n_items"])
    else:
        n_items = int(df["item"].max()) + 1
    tables = engine.aggregate_tables(df, n_items)
    engine.write_metric_tables(run_dir, tables)
    tables["summary"].to_csv(sys.stdout, index=False)
    return 0


def _cmd_verify_example(_args) -> int:
    ok, lines = verify_example()
    for line in lines:
        print(line)
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bubblesim",
        description="Simulate sequential consumption under recommendation regimes.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_config_flags(p, with_out: bool) -> None:
        p.add_argument("--config", help="path to a key=value config file")
        p.add_argument(
            "--set",
            action="append",
            metavar="KEY=VALUE",
            help="override a config key (repeatable)",
        )
        p.add_argument("--paper", action="store_true", help="start from the full published grid")
        p.add_argument("--workers", type=int, help="worker process cap")
        if with_out:
            p.add_argument("--out", help="output directory (overrides output_dir)")

    p_run = sub.add_parser("run", help="execute a sweep and write CSV artifacts")
    add_config_flags(p_run, with_out=True)
    p_run.set_defaults(func=_cmd_run)

    p_agg = sub.add_parser("aggregate", help="rebuild metric tables from trajectories.csv")
    p_agg.add_argument("--out", required=True, help="run directory holding trajectories.csv")
    p_agg.set_defaults(func=_cmd_aggregate)

    p_est = sub.add_parser("estimate", help="print sweep size and projected wall time")
    add_config_flags(p_est, with_out=False)
    p_est.set_defaults(func=_cmd_estimate)

    p_ver = sub.add_parser("verify-example", help="check the hand-computed golden example")
    p_ver.set_defaults(func=_cmd_verify_example)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3
    except (InvariantError, NumericalError) as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
