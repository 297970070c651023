"""Figure rendering for boundarymax CSV/JSON artifacts."""

from .fieldtable import FieldTable, MalformedCSV
from .render import PanelSpec, render_figure1, render_heatmap

__version__ = "0.1.0"
