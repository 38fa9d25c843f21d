"""Arrangements of manifolds with corners at desk scale."""

__version__ = "0.1.0"
