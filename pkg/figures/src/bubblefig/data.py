"""Loading, schema checks, and filtering for sweep output tables.

The figure layer consumes the CSV artifacts written by the simulation
package and performs no statistics of its own: every plotted mean and
confidence interval is read from a ci_half_width column computed
upstream. All this module does is read, validate, and subset.
"""

from pathlib import Path

import pandas as pd

from .errors import DataError, SchemaError

# Required columns per input table, by file name.
TABLE_SCHEMAS = {
    "pooled_metrics.csv": [
        "metric", "group_key", "group_value", "regime", "t",
        "mean", "ci_half_width", "n",
    ],
    "per_period_metrics.csv": [
        "grid_id", "gamma", "sigma", "rho", "beta", "regime", "t",
        "mean_distance", "ci_half_width", "n",
    ],
    "per_user_metrics.csv": [
        "grid_id", "gamma", "sigma", "rho", "beta", "population_id",
        "user_id", "regime", "diversity", "welfare", "rec_value",
    ],
    "homogeneity.csv": [
        "grid_id", "gamma", "sigma", "rho", "beta", "regime",
        "population_id", "homogeneity",
    ],
}

REGIME_ORDER = ("no_recommendation", "recommendation", "oracle")


def load_table(input_dir: str | Path, name: str) -> pd.DataFrame:
    """Read one artifact and verify the columns the figures rely on."""
    path = Path(input_dir) / name
    if not path.is_file():
        raise DataError(f"missing input file: {path}")
    # round_trip keeps grid values exact so equality filters work.
    df = pd.read_csv(path, float_precision="round_trip")
    for column in TABLE_SCHEMAS[name]:
        if column not in df.columns:
            raise SchemaError(f"{name}: missing required column '{column}'")
    return df


def _coerce(df: pd.DataFrame, column: str, raw: str):
    if pd.api.types.is_numeric_dtype(df[column]):
        try:
            return float(raw)
        except ValueError as exc:
            raise DataError(
                f"filter {column}={raw!r}: expected a number for this column"
            ) from exc
    return raw


def apply_filters(df: pd.DataFrame, filters: dict[str, str], table: str) -> pd.DataFrame:
    """Subset by exact equality on each filter key.

    Grid values round-trip through the CSVs bit-exactly, so equality
    comparison against the parsed filter value is safe.
    """
    out = df
    for key, raw in filters.items():
        if key not in out.columns:
            raise SchemaError(f"{table}: no column '{key}' to filter on")
        out = out[out[key] == _coerce(out, key, raw)]
    if out.empty:
        spec = ", ".join(f"{k}={v}" for k, v in filters.items()) or "(none)"
        raise DataError(f"{table}: no rows left after filters {spec}")
    return out


def regimes_present(df: pd.DataFrame) -> list[str]:
    present = set(df["regime"])
    return [r for r in REGIME_ORDER if r in present]
