"""Difference-set frame codes for the block-erasure channel."""

__version__ = "0.1.0"
