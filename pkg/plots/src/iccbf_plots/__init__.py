"""Comparison-figure renderer for iccbf simulation traces."""

from .render import PANELS, FigureSpec, SchemaError, build_figure, load_trace, render

__version__ = "0.1.0"
