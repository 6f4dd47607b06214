"""Coordinated scheduling of deferrable residential loads for real-time power balancing."""

__version__ = "0.1.0"
