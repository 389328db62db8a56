"""Numerical laboratory for the constructive pieces of Shavgulidze's
amenability argument for Thompson's group F."""

__version__ = "0.1.0"
