"""Spectral solver and verification suite for (-Delta)^{3/2} u = +-2 e^{3u} on R^3."""

__version__ = "0.1.0"
