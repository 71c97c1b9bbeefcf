"""Error types for the figure layer."""


class FigureError(Exception):
    """Base class for everything this package raises on purpose."""


class SchemaError(FigureError):
    """An input table is missing a required column, or a filter names an
    unknown column."""


class DataError(FigureError):
    """The inputs exist but cannot support the requested figure: no rows
    after filtering, missing input file, or ambiguous cells that need an
    explicit filter."""


class QualitativeCheckError(FigureError):
    """A pre-draw sanity check on the plotted data failed.

    Each figure asserts the qualitative pattern it is meant to display
    before rendering anything, so a generated image is also a statement
    that the pattern holds in the data.
    """
