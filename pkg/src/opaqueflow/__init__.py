"""opaqueflow - Opacified computation with taint-labeled handles and URL-filtered flow policies."""

__version__ = "0.1.0"
