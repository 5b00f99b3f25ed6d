"""Runway surface condition assessment toolkit."""

__version__ = "0.1.0"
