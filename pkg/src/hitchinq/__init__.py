"""Quantisation of the SL(2) Gaudin system through opers with real holonomy."""

__version__ = "0.1.0"
