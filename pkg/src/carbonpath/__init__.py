"""Chiplet pathfinding: joint search over mapping, chiplets and packaging."""

__version__ = "0.1.0"
