"""Simulator and verification harness for self-stabilizing tree protocols
that contain Byzantine influence by bounding disruption counts."""

__version__ = "0.1.0"
