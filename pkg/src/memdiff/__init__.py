"""Memristor-based differential processing of tactile and visual signals."""

__version__ = "0.1.0"
