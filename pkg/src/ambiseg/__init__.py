"""Desk-scale laboratory for distributions over segmentations."""

__version__ = "0.1.0"
