"""Braid families, train tracks, templates and branched-cover universality checks."""

__version__ = "0.1.0"
