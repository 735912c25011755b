"""Stacked deep residual network for aerial-image semantic segmentation."""

__version__ = "0.1.0"
