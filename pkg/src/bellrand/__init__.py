"""Certified randomness from Bell and steering experiments with qubit POVMs."""

__version__ = "0.1.0"
