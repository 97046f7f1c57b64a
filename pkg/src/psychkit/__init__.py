"""Psychometric analysis of binary response data."""

__version__ = "0.1.0"
