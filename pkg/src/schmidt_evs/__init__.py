"""Random-matrix simulation and Schmidt-spectrum statistics."""

__version__ = "0.1.0"
