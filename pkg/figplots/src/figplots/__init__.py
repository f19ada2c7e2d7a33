"""Publication-style figures from energy-efficiency sweep CSVs."""

__version__ = "0.1.0"

from .render import FigureJob, render_figure, render_figures
from .schema import FIGURES, SchemaError

__all__ = ["FigureJob", "render_figure", "render_figures", "FIGURES",
           "SchemaError", "__version__"]
