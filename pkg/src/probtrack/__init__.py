"""Uncertainty-aware multi-object tracking for Gaussian box detections."""

__version__ = "0.1.0"
