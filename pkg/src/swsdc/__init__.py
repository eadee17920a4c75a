"""Spectral shallow-water solver on the rotating sphere with IMEX SDC and
two-level MLSDC time integration."""

__version__ = "0.1.0"
