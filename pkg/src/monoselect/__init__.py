"""Uncertainty-driven selection of monolingual data for NMT self-training."""

__version__ = "0.1.0"
