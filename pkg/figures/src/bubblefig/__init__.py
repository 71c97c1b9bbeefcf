"""Figure generation for simulation sweep outputs.

Reads the CSV artifacts produced by the simulation package and renders
publication-style figures with 95% CI bands. Each figure runs a
qualitative check on the data it is about to draw, so rendering doubles
as a regression check on the simulated patterns.
"""

from .data import REGIME_ORDER, apply_filters, load_table
from .errors import DataError, FigureError, QualitativeCheckError, SchemaError
from .render import FIGURE_IDS, FigureSpec, render

__all__ = [
    "DataError",
    "FIGURE_IDS",
    "FigureError",
    "FigureSpec",
    "QualitativeCheckError",
    "REGIME_ORDER",
    "SchemaError",
    "apply_filters",
    "load_table",
    "render",
]
