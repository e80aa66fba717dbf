"""Applying a certified table to bitmaps: share encoding, stacking and measurement."""
from extvc.codec.base import BitImage, Layout, ShareSet
from extvc.codec.images import read_image, write_image
from extvc.codec.shares import Measurement, encode, measure, security_histogram, stack

__all__ = [
    "BitImage",
    "Layout",
    "ShareSet",
    "Measurement",
    "read_image",
    "write_image",
    "encode",
    "stack",
    "measure",
    "security_histogram",
]
