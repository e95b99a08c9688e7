"""Chart rendering for the metric toolkit's CSV/JSON outputs.

This package never computes statistics itself: everything it draws comes
from the CSV rows and the companion ``*.slopes.json`` files written by the
``wkm`` command line tool.
"""

from .render import FigureSpec, SchemaError, SpecError, render

__all__ = ["FigureSpec", "SchemaError", "SpecError", "render"]
