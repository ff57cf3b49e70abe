"""Finite-truncation laboratory for non-local symmetric forms, their measures and jump processes."""

__version__ = "0.1.0"
