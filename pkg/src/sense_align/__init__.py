"""Gloss alignment, equivalence-pair generation, classifier head, and WSD evaluation."""

__version__ = "0.1.0"
