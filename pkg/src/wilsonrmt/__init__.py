"""Spectral statistics of the chGUE-to-GUE two-matrix model for the Hermitian Wilson Dirac operator."""

__version__ = "0.1.0"

from .sop import ModelParams, MicroParams  # noqa: E402,F401
