"""Hybrid classical-quantum credit scoring classifier on a statevector simulator."""

__version__ = "0.1.0"
