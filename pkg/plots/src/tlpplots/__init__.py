"""Figure generation from tlpsim stats CSV exports.

This package reads the CSV files written by the simulator's ``run``,
``ablate``, and ``sweep`` commands and renders the standard result figures.
It never invokes the simulator itself: every figure is a pure function of
CSV content.
"""

from .figures import (FIGURE_KINDS, FigureSpec, SchemaError, ablation_series,
                      accuracy_series, bandwidth_series, breakdown_series,
                      delta_series, load_rows, render)

__all__ = [
    "FIGURE_KINDS", "FigureSpec", "SchemaError", "ablation_series",
    "accuracy_series", "bandwidth_series", "breakdown_series",
    "delta_series", "load_rows", "render",
]
