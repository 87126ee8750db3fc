"""Exact BRST cohomology of spectrally flowed relaxed affine sl2 modules."""

__version__ = "0.1.0"
