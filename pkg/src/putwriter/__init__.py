"""Backtesting engine and strategy library for systematic short-put writing."""

__version__ = "0.1.0"
