"""Utility functions for ccsim"""

from src.utils.loaders import load_price_file, load_scenario, read_manifest, read_spot_traces
from src.utils.validation import validate_scenario
from src.utils.formatting import render_summary, format_duration

__all__ = [
    "load_scenario",
    "load_price_file",
    "read_spot_traces",
    "read_manifest",
    "validate_scenario",
    "render_summary",
    "format_duration",
]
