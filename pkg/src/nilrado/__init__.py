"""Truncated decorated Rado graphs, their cocycle groups, and arithmetic instances."""

__version__ = "0.1.0"
