"""Polynomial chaos regression with a decay-structured generative model."""

__version__ = "0.1.0"
