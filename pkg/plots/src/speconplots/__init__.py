"""Figure rendering for speconsim CSV reports."""

from .render import KINDS, PlotSpec, RenderError, RenderResult, render

__all__ = ["KINDS", "PlotSpec", "RenderError", "RenderResult", "render"]
__version__ = "0.1.0"
