"""The five figure renderers.

Every renderer follows the same contract: load the tables it needs, apply
the user's filters, run a qualitative pre-draw check where the figure is
meant to demonstrate a pattern, then draw. Means and CI half-widths come
straight from the CSVs; nothing is re-estimated here.
"""

from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)
import pandas as pd  # noqa: E402

from .data import REGIME_ORDER, apply_filters, load_table, regimes_present  # noqa: E402
from .errors import DataError, QualitativeCheckError  # noqa: E402

plt.rcParams["svg.hashsalt"] = "bubblefig"

COLORS = {
    "no_recommendation": "#0173b2",
    "recommendation": "#de8f05",
    "oracle": "#029e73",
}
LABELS = {
    "no_recommendation": "no recommendation",
    "recommendation": "recommendation",
    "oracle": "oracle",
}


@dataclass(frozen=True)
class FigureSpec:
    """One render request: which figure, from where, to where, on what subset."""

    figure_id: str
    input_dir: str
    output: str
    filters: dict = field(default_factory=dict)
    png: bool = False


def _band(ax, rows: pd.DataFrame, x: str, y: str):
    """Draw one mean line plus CI band per regime onto ax."""
    for regime in regimes_present(rows):
        sub = rows[rows["regime"] == regime].sort_values(x)
        ax.plot(sub[x], sub[y], color=COLORS[regime], label=LABELS[regime], lw=1.6)
        ax.fill_between(
            sub[x],
            sub[y] - sub["ci_half_width"],
            sub[y] + sub["ci_half_width"],
            color=COLORS[regime],
            alpha=0.25,
            lw=0,
        )


def _legend(fig):
    handles, labels = fig.axes[0].get_legend_handles_labels()
    fig.legend(handles, labels, loc="lower center", ncol=len(labels), frameon=False)


def _check_paths_overlap_at_rho_zero(band: pd.DataFrame) -> None:
    """The rho=0 panel must show three statistically indistinguishable paths."""
    for t, rows in band.groupby("t"):
        sub = rows.set_index("regime")
        names = [r for r in REGIME_ORDER if r in sub.index]
        for i, a in enumerate(names):
            for b in names[i + 1 :]:
                gap = abs(sub.loc[a, "mean"] - sub.loc[b, "mean"])
                slack = sub.loc[a, "ci_half_width"] + sub.loc[b, "ci_half_width"]
                if gap > slack:
                    raise QualitativeCheckError(
                        f"rho=0 distance paths separate at t={int(t)}: {a} vs {b} "
                        f"differ by {gap:.3f} with CI slack {slack:.3f}"
                    )


def _check_recommendation_homogenizes(beta_rows: pd.DataFrame) -> None:
    """Recommendation must sit above no-recommendation at every beta > 0."""
    piv = beta_rows.pivot(index="group_value", columns="regime", values="mean")
    for column in ("recommendation", "no_recommendation"):
        if column not in piv.columns:
            raise DataError(f"homogeneity rows lack the {column} regime")
    for beta, row in piv.iterrows():
        if float(beta) > 0 and not row["recommendation"] > row["no_recommendation"]:
            raise QualitativeCheckError(
                f"homogeneity under recommendation does not exceed "
                f"no-recommendation at beta={beta}"
            )


def f1_distance_paths(spec: FigureSpec):
    pooled = load_table(spec.input_dir, "pooled_metrics.csv")
    rows = pooled[
        (pooled["metric"] == "consecutive_distance")
        & (pooled["group_key"] == "rho_band")
    ]
    rows = apply_filters(rows, spec.filters, "pooled_metrics.csv")
    zero = rows[rows["group_value"] == "zero"]
    if not zero.empty:
        _check_paths_overlap_at_rho_zero(zero)

    bands = [b for b in ("zero", "positive") if (rows["group_value"] == b).any()]
    fig, axes = plt.subplots(
        1, len(bands), figsize=(4.2 * len(bands), 3.4), sharey=True, squeeze=False
    )
    titles = {"zero": "ρ = 0", "positive": "ρ > 0"}
    for ax, band in zip(axes[0], bands):
        _band(ax, rows[rows["group_value"] == band], "t", "mean")
        ax.set_title(titles[band])
        ax.set_xlabel("period")
    axes[0][0].set_ylabel("mean consecutive distance")
    _legend(fig)
    fig.suptitle("Consumption distance over time")
    fig.tight_layout(rect=(0, 0.08, 1, 1))
    return fig


def f2_rho_gamma_grid(spec: FigureSpec):
    per_period = load_table(spec.input_dir, "per_period_metrics.csv")
    rows = apply_filters(per_period, spec.filters, "per_period_metrics.csv")
    for col in ("sigma", "beta"):
        values = sorted(rows[col].unique())
        if len(values) > 1:
            raise DataError(
                f"per_period_metrics.csv: multiple {col} values {values}; "
                f"add --filter {col}=<value> to pick one panel slice"
            )
    rhos = sorted(rows["rho"].unique())
    gammas = sorted(rows["gamma"].unique())
    fig, axes = plt.subplots(
        len(rhos),
        len(gammas),
        figsize=(3.1 * len(gammas), 2.5 * len(rhos)),
        sharex=True,
        sharey="row",
        squeeze=False,
    )
    for i, rho in enumerate(rhos):
        for j, gamma in enumerate(gammas):
            ax = axes[i][j]
            cell = rows[(rows["rho"] == rho) & (rows["gamma"] == gamma)]
            if cell.empty:
                ax.set_axis_off()
                continue
            _band(ax, cell, "t", "mean_distance")
            if i == 0:
                ax.set_title(f"γ = {gamma:g}")
            if j == 0:
                ax.set_ylabel(f"ρ = {rho:g}\nmean distance")
            if i == len(rhos) - 1:
                ax.set_xlabel("period")
    _legend(fig)
    fig.suptitle("Consumption distance by ρ and γ")
    fig.tight_layout(rect=(0, 0.06, 1, 1))
    return fig


def f3_welfare_diversity(spec: FigureSpec):
    pooled = load_table(spec.input_dir, "pooled_metrics.csv")
    rows = pooled[
        pooled["metric"].isin(["diversity", "welfare"])
        & pooled["group_key"].isin(["rho", "gamma"])
    ]
    rows = apply_filters(rows, spec.filters, "pooled_metrics.csv")
    rows = rows.assign(x=rows["group_value"].astype(float))
    fig, axes = plt.subplots(2, 2, figsize=(8.0, 6.0), squeeze=False)
    axis_label = {"rho": "ρ", "gamma": "γ"}
    for i, metric in enumerate(("diversity", "welfare")):
        for j, key in enumerate(("rho", "gamma")):
            ax = axes[i][j]
            cell = rows[(rows["metric"] == metric) & (rows["group_key"] == key)]
            if cell.empty:
                ax.set_axis_off()
                continue
            _band(ax, cell, "x", "mean")
            ax.set_xlabel(axis_label[key])
            ax.set_ylabel(f"mean {metric}")
    _legend(fig)
    fig.suptitle("Diversity and welfare across the grid")
    fig.tight_layout(rect=(0, 0.05, 1, 1))
    return fig


def f4_scatter(spec: FigureSpec):
    per_user = load_table(spec.input_dir, "per_user_metrics.csv")
    rows = apply_filters(per_user, spec.filters, "per_user_metrics.csv")
    gammas = sorted(rows["gamma"].unique())
    fig, axes = plt.subplots(
        1, len(gammas), figsize=(3.4 * len(gammas), 3.4), sharey=True, squeeze=False
    )
    for ax, gamma in zip(axes[0], gammas):
        cell = rows[rows["gamma"] == gamma]
        for regime in regimes_present(cell):
            sub = cell[cell["regime"] == regime]
            ax.scatter(
                sub["diversity"],
                sub["welfare"],
                s=5,
                alpha=0.35,
                lw=0,
                color=COLORS[regime],
                label=LABELS[regime],
            )
        ax.set_title(f"γ = {gamma:g}")
        ax.set_xlabel("diversity")
    axes[0][0].set_ylabel("welfare")
    _legend(fig)
    fig.suptitle("Per-user diversity vs. welfare")
    fig.tight_layout(rect=(0, 0.08, 1, 1))
    return fig


def f5_homogeneity(spec: FigureSpec):
    pooled = load_table(spec.input_dir, "pooled_metrics.csv")
    rows = pooled[
        (pooled["metric"] == "homogeneity") & pooled["group_key"].isin(["beta", "rho"])
    ]
    rows = apply_filters(rows, spec.filters, "pooled_metrics.csv")
    beta_rows = rows[rows["group_key"] == "beta"]
    if not beta_rows.empty:
        _check_recommendation_homogenizes(beta_rows)
    rows = rows.assign(x=rows["group_value"].astype(float))
    keys = [k for k in ("beta", "rho") if (rows["group_key"] == k).any()]
    fig, axes = plt.subplots(
        1, len(keys), figsize=(4.2 * len(keys), 3.4), sharey=True, squeeze=False
    )
    axis_label = {"beta": "β", "rho": "ρ"}
    for ax, key in zip(axes[0], keys):
        _band(ax, rows[rows["group_key"] == key], "x", "mean")
        ax.set_xlabel(axis_label[key])
    axes[0][0].set_ylabel("mean homogeneity")
    _legend(fig)
    fig.suptitle("Population homogeneity")
    fig.tight_layout(rect=(0, 0.08, 1, 1))
    return fig


RENDERERS = {
    "f1_distance_paths": f1_distance_paths,
    "f2_rho_gamma_grid": f2_rho_gamma_grid,
    "f3_welfare_diversity": f3_welfare_diversity,
    "f4_scatter": f4_scatter,
    "f5_homogeneity": f5_homogeneity,
}

FIGURE_IDS = tuple(sorted(RENDERERS))


def render(spec: FigureSpec) -> Path:
    """Render one figure and write it to spec.output; returns the path."""
    if spec.figure_id not in RENDERERS:
        raise ValueError(
            f"unknown figure_id {spec.figure_id!r}; expected one of {FIGURE_IDS}"
        )
    fig = RENDERERS[spec.figure_id](spec)
    out = Path(spec.output)
    if out.parent != Path(""):
        out.parent.mkdir(parents=True, exist_ok=True)
    fmt = "png" if (spec.png or out.suffix.lower() == ".png") else "svg"
    kwargs: dict = {"format": fmt}
    if fmt == "png":
        kwargs["dpi"] = 150
    else:
        # Strip the creation date so repeated renders are byte-identical.
        kwargs["metadata"] = {"Date": None}
    fig.savefig(out, **kwargs)
    plt.close(fig)
    return out
