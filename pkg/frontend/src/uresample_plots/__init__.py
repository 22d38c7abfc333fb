"""Figures from uniform-resample-report v1 CSV files."""

from .figures import plot_coverage, plot_dkw, plot_fwer
from .report import SCHEMA_HEADER, ReportFile, SchemaError, file_sha256

__version__ = "0.1.0"

__all__ = [
    "SCHEMA_HEADER",
    "ReportFile",
    "SchemaError",
    "file_sha256",
    "plot_coverage",
    "plot_dkw",
    "plot_fwer",
]
