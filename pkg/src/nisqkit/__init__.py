"""Desk-scale simulation of unary option pricing and data re-uploading models."""

__version__ = "0.1.0"
