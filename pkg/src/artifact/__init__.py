"""Microlocal toolkit for the Klein-Gordon equation on the compactified half-plane."""

__version__ = "0.1.0"
