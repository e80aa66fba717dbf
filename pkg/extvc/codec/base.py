"""Bitmaps, subpixel layouts and share sets."""
from typing import Any, Dict, List, Sequence, Tuple
from dataclasses import dataclass, field
from math import ceil, isqrt
import logging
import os

import numpy as np

from extvc.base import DomainError, check_document, dump_json, load_json, make_document

__all__ = ["BitImage", "Layout", "ShareSet", "SHARES_FORMAT"]


logger = logging.getLogger(__name__)

SHARES_FORMAT = "extvc.share-set"
_SIDECAR_KEYS = frozenset(
    ["format", "version", "n", "m", "layout", "width", "height", "fingerprint", "seed", "files"]
)


@dataclass(frozen=True, eq=False)
class BitImage:
    """A binary raster, ``True`` meaning black, stored as a ``height x width`` Boolean array."""

    bits: np.ndarray

    def __post_init__(self) -> None:
        bits = np.asarray(self.bits)
        if bits.ndim != 2 or 0 in bits.shape:
            raise DomainError(f"expecting a nonempty 2-d raster, got shape {bits.shape}")
        bits = bits.astype(bool)
        bits.setflags(write=False)
        object.__setattr__(self, "bits", bits)

    @classmethod
    def blank(cls, width: int, height: int) -> "BitImage":
        return cls(np.zeros((height, width), dtype=bool))

    @classmethod
    def from_rows(cls, rows: Sequence[str]) -> "BitImage":
        """From strings such as ``"#.#"`` (``#`` or ``1`` black)."""
        return cls(np.array([[c in "#1" for c in row] for row in rows], dtype=bool))

    @property
    def width(self) -> int:
        return int(self.bits.shape[1])

    @property
    def height(self) -> int:
        return int(self.bits.shape[0])

    @property
    def shape(self) -> Tuple[int, int]:
        return self.height, self.width

    def black_count(self) -> int:
        return int(self.bits.sum())

    def __eq__(self, other: object) -> bool:
        return isinstance(other, BitImage) and np.array_equal(self.bits, other.bits)

    def __hash__(self) -> int:
        return hash((self.shape, self.bits.tobytes()))

    def __repr__(self) -> str:
        return f"BitImage({self.width}x{self.height}, {self.black_count()} black)"


@dataclass(frozen=True)
class Layout:
    """Subpixel grid of one secret pixel; cells beyond the expansion are always black."""

    rows: int
    cols: int

    def __post_init__(self) -> None:
        if self.rows < 1 or self.cols < 1:
            raise DomainError(f"layout must be at least 1x1, got {self.rows}x{self.cols}")

    @classmethod
    def near_square(cls, m: int) -> "Layout":
        """``floor(sqrt(m))`` rows and as many columns as needed."""
        if m < 1:
            raise DomainError("pixel expansion must be positive")
        rows = isqrt(m)
        return cls(rows, ceil(m / rows))

    @classmethod
    def parse(cls, text: str) -> "Layout":
        """From ``"RxC"``."""
        try:
            rows, cols = (int(v) for v in text.lower().split("x"))
        except ValueError as e:
            raise DomainError(f"layout must read RxC, got {text!r}") from e
        return cls(rows, cols)

    @property
    def capacity(self) -> int:
        return self.rows * self.cols

    def __str__(self) -> str:
        return f"{self.rows}x{self.cols}"


def _share_path(directory: str, name: Any) -> str:
    """``name`` joined onto ``directory``; sidecar entries are plain file names."""
    if not isinstance(name, str) or not name or ".." in name or any(
        sep in name for sep in ("/", "\\", os.sep)
    ):
        raise DomainError(f"share file {name!r} does not name a file inside {directory}")
    return os.path.join(directory, name)


@dataclass(frozen=True)
class ShareSet:
    """The ``n`` transparencies produced from one table and seed.

    Every share measures ``(height * layout.rows) x (width * layout.cols)``; the block of a secret
    pixel holds one row of the permuted basis matrix in row-major order, followed by black filler.
    """

    shares: Tuple[BitImage, ...]
    layout: Layout
    m: int
    fingerprint: str
    seed: int
    extra: Dict[str, Any] = field(default_factory=dict, compare=False)

    def __post_init__(self) -> None:
        shares = tuple(self.shares)
        if not shares:
            raise DomainError("a share set needs at least one share")
        if len({s.shape for s in shares}) != 1:
            raise DomainError("shares differ in size")
        h, w = shares[0].shape
        if h % self.layout.rows or w % self.layout.cols:
            raise DomainError(f"share size {w}x{h} is not a multiple of the layout {self.layout}")
        if self.layout.capacity < self.m:
            raise DomainError(f"layout {self.layout} cannot hold {self.m} subpixels")
        object.__setattr__(self, "shares", shares)

    @property
    def n(self) -> int:
        return len(self.shares)

    @property
    def width(self) -> int:
        """Secret image width."""
        return self.shares[0].width // self.layout.cols

    @property
    def height(self) -> int:
        return self.shares[0].height // self.layout.rows

    def __getitem__(self, i: int) -> BitImage:
        """Share of transparency ``i`` (1-based)."""
        if not 1 <= i <= self.n:
            raise DomainError(f"no transparency {i} among {self.n}")
        return self.shares[i - 1]

    def metadata(self, files: List[str]) -> Dict[str, Any]:
        return make_document(
            SHARES_FORMAT,
            n=self.n,
            m=self.m,
            layout=[self.layout.rows, self.layout.cols],
            width=self.width,
            height=self.height,
            fingerprint=self.fingerprint,
            seed=self.seed,
            files=files,
            **self.extra,
        )

    def save(self, directory: str, ext: str = "pbm", plain: bool = False) -> List[str]:
        """Writes ``share_<i>.<ext>`` for every transparency plus the ``shares.json`` sidecar.

        Returns:
            List[str]: Paths written, sidecar last.
        """
        from extvc.codec.images import write_image

        os.makedirs(directory, exist_ok=True)
        files = [f"share_{i}.{ext}" for i in range(1, self.n + 1)]
        paths = []
        for name, share in zip(files, self.shares):
            path = os.path.join(directory, name)
            write_image(share, path, plain=plain)
            paths.append(path)
        sidecar = os.path.join(directory, "shares.json")
        dump_json(self.metadata(files), sidecar)
        paths.append(sidecar)
        logger.info("wrote %d shares to %s", self.n, directory)
        return paths

    @classmethod
    def load(cls, directory: str) -> "ShareSet":
        from extvc.codec.images import read_image

        doc = check_document(load_json(os.path.join(directory, "shares.json")), SHARES_FORMAT)
        try:
            shares = tuple(read_image(_share_path(directory, name)) for name in doc["files"])
            return cls(
                shares=shares,
                layout=Layout(*doc["layout"]),
                m=int(doc["m"]),
                fingerprint=str(doc["fingerprint"]),
                seed=int(doc["seed"]),
                extra={k: v for k, v in doc.items() if k not in _SIDECAR_KEYS},
            )
        except (KeyError, TypeError) as e:
            raise DomainError(f"malformed share sidecar: {e!r}") from e
