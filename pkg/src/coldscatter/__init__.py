"""Coupled-channel scattering engine for cold atom-molecule collisions in a
magnetic field."""

__version__ = "0.1.0"
