"""Synthetic microgrid line-protection events, wavelet features and classifier benchmarking."""

__version__ = "0.1.0"
