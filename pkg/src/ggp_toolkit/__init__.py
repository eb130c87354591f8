"""General Game Playing toolchain."""

__version__ = "0.1.0"
