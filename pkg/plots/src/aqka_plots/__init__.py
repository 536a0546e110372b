"""Figure rendering for shot-allocation experiment records."""

from .render import FAMILIES, PlotSpec, SchemaError, heatmap_stats, render, render_heatmap

__version__ = "0.1.0"
