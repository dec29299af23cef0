"""Compressed-sensing MRI reconstruction toolkit and benchmark harness."""

__version__ = "0.1.0"
