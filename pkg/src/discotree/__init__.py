"""Discourse trees from topic-segmentation boundary probabilities."""

__version__ = "0.1.0"
