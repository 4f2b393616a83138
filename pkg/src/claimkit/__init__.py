"""Toolkit for scientific claim generation, negation, and evaluation."""

__version__ = "0.1.0"
