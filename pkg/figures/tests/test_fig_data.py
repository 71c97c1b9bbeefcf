"""Schema validation, filtering, and error paths on tiny synthetic tables."""

import numpy as np
import pandas as pd
import pytest

pytest.importorskip("bubblefig")

from bubblefig import (
    DataError,
    FigureSpec,
    QualitativeCheckError,
    SchemaError,
    apply_filters,
    load_table,
    render,
)
from bubblefig.cli import main

REGIMES = ("no_recommendation", "recommendation", "oracle")


def pooled_frame():
    """A miniature pooled_metrics table with every section the figures use."""
    rows = []
    # Distance paths by rho band, three periods, overlapping regimes.
    for band in ("zero", "positive"):
        for regime in REGIMES:
            for t in (2, 3, 4):
                rows.append({
                    "metric": "consecutive_distance", "group_key": "rho_band",
                    "group_value": band, "regime": regime, "t": t,
                    "mean": 50.0 + 0.1 * REGIMES.index(regime), "ci_half_width": 0.5,
                    "n": 100,
                })
    # Diversity and welfare curves over rho and gamma.
    for metric in ("diversity", "welfare"):
        for key, values in (("rho", (0.0, 0.5)), ("gamma", (0.0, 5.0))):
            for value in values:
                for regime in REGIMES:
                    rows.append({
                        "metric": metric, "group_key": key, "group_value": value,
                        "regime": regime, "t": np.nan,
                        "mean": 1.0 + REGIMES.index(regime), "ci_half_width": 0.1,
                        "n": 100,
                    })
    # Homogeneity over beta and rho; recommendation above no-recommendation.
    level = {"no_recommendation": 0.1, "oracle": 0.2, "recommendation": 0.3}
    for key, values in (("beta", (0.0, 1.0, 5.0)), ("rho", (0.0, 0.5))):
        for value in values:
            for regime in REGIMES:
                rows.append({
                    "metric": "homogeneity", "group_key": key, "group_value": value,
                    "regime": regime, "t": np.nan,
                    "mean": level[regime] + 0.01 * value, "ci_half_width": 0.02,
                    "n": 20,
                })
    return pd.DataFrame(rows)


def write_pooled(dirpath, frame=None):
    frame = pooled_frame() if frame is None else frame
    frame.to_csv(dirpath / "pooled_metrics.csv", index=False)
    return dirpath


def test_load_table_missing_file(tmp_path):
    with pytest.raises(DataError, match="missing input file"):
        load_table(tmp_path, "pooled_metrics.csv")


def test_load_table_missing_column_named(tmp_path):
    frame = pooled_frame().drop(columns=["ci_half_width"])
    write_pooled(tmp_path, frame)
    with pytest.raises(SchemaError, match="ci_half_width"):
        load_table(tmp_path, "pooled_metrics.csv")


def test_filter_unknown_column(tmp_path):
    write_pooled(tmp_path)
    df = load_table(tmp_path, "pooled_metrics.csv")
    with pytest.raises(SchemaError, match="no column 'flavor'"):
        apply_filters(df, {"flavor": "x"}, "pooled_metrics.csv")


def test_filter_empty_result(tmp_path):
    write_pooled(tmp_path)
    df = load_table(tmp_path, "pooled_metrics.csv")
    with pytest.raises(DataError, match="no rows left"):
        apply_filters(df, {"metric": "nonexistent"}, "pooled_metrics.csv")


def test_filter_numeric_coercion(tmp_path):
    write_pooled(tmp_path)
    df = load_table(tmp_path, "pooled_metrics.csv")
    out = apply_filters(df, {"t": "3"}, "pooled_metrics.csv")
    assert set(out["t"]) == {3}
    with pytest.raises(DataError, match="expected a number"):
        apply_filters(df, {"t": "three"}, "pooled_metrics.csv")


def test_render_unknown_figure_id(tmp_path):
    spec = FigureSpec("f9_nope", str(tmp_path), str(tmp_path / "x.svg"))
    with pytest.raises(ValueError, match="unknown figure_id"):
        render(spec)


def test_f1_renders_and_checks_pass(tmp_path):
    write_pooled(tmp_path)
    out = tmp_path / "f1.svg"
    render(FigureSpec("f1_distance_paths", str(tmp_path), str(out)))
    text = out.read_text()
    assert text.lstrip().startswith("<?xml")
    assert "<svg" in text


def test_f1_detects_separated_paths(tmp_path):
    frame = pooled_frame()
    sep = (frame["group_value"] == "zero") & (frame["regime"] == "oracle")
    frame.loc[sep, "mean"] += 10.0
    write_pooled(tmp_path, frame)
    with pytest.raises(QualitativeCheckError, match="separate at t=2"):
        render(FigureSpec("f1_distance_paths", str(tmp_path), str(tmp_path / "x.svg")))


def test_f5_detects_ordering_violation(tmp_path):
    frame = pooled_frame()
    bad = (
        (frame["metric"] == "homogeneity")
        & (frame["group_key"] == "beta")
        & (frame["group_value"] == 5.0)
        & (frame["regime"] == "recommendation")
    )
    frame.loc[bad, "mean"] = 0.0
    write_pooled(tmp_path, frame)
    with pytest.raises(QualitativeCheckError, match="beta=5"):
        render(FigureSpec("f5_homogeneity", str(tmp_path), str(tmp_path / "x.svg")))


def test_f5_beta_zero_tie_allowed(tmp_path):
    frame = pooled_frame()
    beta0 = (
        (frame["metric"] == "homogeneity")
        & (frame["group_key"] == "beta")
        & (frame["group_value"] == 0.0)
    )
    frame.loc[beta0, "mean"] = 0.15
    write_pooled(tmp_path, frame)
    render(FigureSpec("f5_homogeneity", str(tmp_path), str(tmp_path / "f5.svg")))
    assert (tmp_path / "f5.svg").exists()


def test_cli_reports_data_errors(tmp_path, capsys):
    write_pooled(tmp_path)
    code = main([
        "--figure", "f1_distance_paths",
        "--in", str(tmp_path),
        "--out", str(tmp_path / "f1.svg"),
        "--filter", "metric=nonexistent",
    ])
    assert code == 1
    assert "no rows left" in capsys.readouterr().err


def test_cli_rejects_bad_filter_syntax(tmp_path):
    with pytest.raises(SystemExit) as exc:
        main([
            "--figure", "f1_distance_paths",
            "--in", str(tmp_path),
            "--out", str(tmp_path / "f1.svg"),
            "--filter", "rho0.5",
        ])
    assert exc.value.code == 2


def test_cli_rejects_unknown_figure(tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["--figure", "f6_extra", "--in", str(tmp_path), "--out", "x.svg"])
    assert exc.value.code == 2
