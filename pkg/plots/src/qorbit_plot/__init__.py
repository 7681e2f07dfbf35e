"""Static rendering of qorbit trajectory CSVs."""

__version__ = "0.1.0"

from .render import (
    EmptyTraceError,
    MissingColumnsError,
    PlotSpec,
    RenderError,
    load_trace,
    render,
)

__all__ = [
    "EmptyTraceError",
    "MissingColumnsError",
    "PlotSpec",
    "RenderError",
    "load_trace",
    "render",
]
