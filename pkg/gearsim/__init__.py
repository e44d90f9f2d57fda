"""Spur-gear vibration simulation engine."""

__version__ = "1.0.0"
