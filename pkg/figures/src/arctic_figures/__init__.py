"""Regenerate experiment figures from arctic-lab batch CSVs.

This package never simulates anything: it reads the engine's CSV artifacts,
draws multi-panel line figures, and writes a data sidecar holding exactly
the plotted series so results can be audited without parsing images.
"""

from .render import (
    EmptyInputError,
    FigureSpec,
    MissingColumnError,
    Panel,
    load_spec,
    read_batch_csv,
    render,
)

__version__ = "0.1.0"
