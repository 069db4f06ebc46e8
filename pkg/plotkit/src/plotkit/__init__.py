"""Figure rendering for solver run directories (CSV/JSON contract)."""

__version__ = "0.1.0"

from .reader import load_run, RunData
from .render import render, FIGURE_KINDS
