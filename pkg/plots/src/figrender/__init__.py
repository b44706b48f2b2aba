"""Static chart rendering for the bayeslimit CSV outputs."""

__version__ = "0.1.0"
