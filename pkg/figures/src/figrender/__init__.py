"""Figure rendering for krylovlr harness CSVs."""

from .plots import FLOOR, PlotSpec, load_figure_spec, render, render_figure, save_figure
from .reader import EXPECTED_COLUMNS, SchemaError, load_records

__version__ = "0.1.0"

__all__ = [
    "FLOOR",
    "PlotSpec",
    "load_figure_spec",
    "render",
    "render_figure",
    "save_figure",
    "EXPECTED_COLUMNS",
    "SchemaError",
    "load_records",
]
