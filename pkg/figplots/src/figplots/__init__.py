"""Figure scripts rendering fluxmod CSV/JSON artifacts; one module per figure."""

from .common import FigureJob, SchemaError, load_csv, load_json

__all__ = ["FigureJob", "SchemaError", "load_csv", "load_json"]
__version__ = "0.1.0"
