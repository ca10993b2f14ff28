"""Figure rendering for coopstc result tables."""

__version__ = "0.1.0"

from .render import PlotSpec, SchemaError, breakpoints, build_figure, read_table, render
