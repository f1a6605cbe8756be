"""Distributional integration and summability toolkit."""

__version__ = "0.1.0"
