"""Personality-trait inference from smartphone sensing data across countries."""

__version__ = "0.1.0"
