"""Football match outcome forecasting from year-specific team profiles."""

__version__ = "0.1.0"
