"""Anchor-Region Networks for nested entity mention detection."""
__version__ = "0.1.0"
