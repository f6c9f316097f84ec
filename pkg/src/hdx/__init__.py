"""Certification tools for small high-dimensional expanders over F_2."""

from __future__ import annotations

__version__ = "0.1.0"

__all__ = ["__version__"]
