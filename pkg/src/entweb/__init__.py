"""Simulation and resource analysis of distributed W-state generation."""

__version__ = "0.1.0"
