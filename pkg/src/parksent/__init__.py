"""Parking sentiment analytics over point-of-interest reviews."""
from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("artifact")
except PackageNotFoundError:
    __version__ = "0.1.0"

__all__ = ["__version__"]
