"""Figure generation for solver benchmark outputs (CSV traces + summary)."""

from .io import SchemaError, TraceTable, best_traces, read_summary, read_trace
from .render import FIGURE_KINDS, PlotJob, render

__version__ = "0.1.0"
