"""Construction and numerical verification of crystalline point measures."""

__version__ = "0.1.0"
