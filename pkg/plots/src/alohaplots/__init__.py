"""Publication-style rendering of batch-service slotted Aloha result CSVs."""

from .figures import FIGURE_IDS, FigureJob, build_figure, render
from .reader import Row, SchemaError, read_rows

__version__ = "0.1.0"
