"""Bitmap format nodes (thin wrappers around :mod:`extvc.codec.images`)."""
from typing import Any
from dataclasses import dataclass
from abc import ABC, abstractmethod

from omegaconf import MISSING

from extvc.codec.base import BitImage
from extvc.codec.images import read_image, write_image

__all__ = ["ImageCodec", "ImageCodecPbm", "ImageCodecPng"]


@dataclass
class ImageCodec(ABC):
    """Base class for all image formats. Reading detects the format from the file itself, the node
    only decides how shares and stacks are written."""

    ext: str = MISSING

    def __init__(self, **kwargs: Any) -> None:
        self.ext = kwargs.pop("ext", self.ext)
        self.kwargs = kwargs

    def read(self, path: str) -> BitImage:
        return read_image(path)

    @abstractmethod
    def write(self, image: BitImage, path: str) -> str:
        pass


@dataclass(init=False)
class ImageCodecPbm(ImageCodec):
    """Portable bitmap, raw (P4) unless ``plain``."""

    _target_: str = "extvc.cli.readers.ImageCodecPbm"

    ext: str = "pbm"
    plain: bool = False

    def write(self, image: BitImage, path: str) -> str:
        write_image(image, path, plain=bool(self.kwargs.get("plain", False)))
        return path


@dataclass(init=False)
class ImageCodecPng(ImageCodec):
    """1-bit PNG, needs ``pypng``."""

    _target_: str = "extvc.cli.readers.ImageCodecPng"

    ext: str = "png"

    def write(self, image: BitImage, path: str) -> str:
        write_image(image, path)
        return path
