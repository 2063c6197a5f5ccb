"""Digitization pipeline for scanned balance-sheet books."""

__version__ = "0.1.0"
