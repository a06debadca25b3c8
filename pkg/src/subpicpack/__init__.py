"""Subpicture packing toolkit for texture/geometry atlas bitstreams."""

__version__ = "0.1.0"
