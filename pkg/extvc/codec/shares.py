"""Encoding secret images into shares, stacking shares and measuring what a stack reveals.

The column permutation of every secret pixel comes from a Philox counter-based generator: row
``y`` of the secret uses the key ``seed + (y << 64)`` and pixel ``x`` of that row consumes raw
words ``[x*m, (x+1)*m)``, whose stable argsort is the permutation. Outputs therefore depend only
on the seed and the inputs, never on how rows are scheduled.
"""
from typing import Any, Dict, List, Mapping, NamedTuple, Optional, Tuple
from collections import Counter
from fractions import Fraction
import logging
import warnings

import numpy as np

from extvc.base import DomainError, SchemeViolation, VerificationError
from extvc.builder import basis_matrix
from extvc.codec.base import BitImage, Layout, ShareSet
from extvc.lattice import SubsetId, cardinality, elements, format_subset
from extvc.scheduling import Scheduler
from extvc.scheme import SchemeTable
from extvc.verifier import certify

__all__ = [
    "Measurement",
    "pixel_codes",
    "encode",
    "stack",
    "measure",
    "security_histogram",
]


logger = logging.getLogger(__name__)

SEED_LIMIT = 1 << 64


class Measurement(NamedTuple):
    """Black counts per block over white (``l``) and black (``h``) secret pixels; a colour absent
    from the secret leaves its count (and the contrast) ``None``."""

    l: Optional[int]  # noqa: E741
    h: Optional[int]
    alpha: Optional[Fraction]
    m_effective: int


def pixel_codes(table: SchemeTable, secrets: Mapping[SubsetId, BitImage]) -> np.ndarray:
    """Colour assignment code of every secret pixel; members without an image count as white.

    Raises:
        DomainError: on images for non-members or of differing sizes.
    """
    family = table.family
    if not secrets:
        raise DomainError("at least one secret image is needed")
    unknown = [t for t in secrets if t not in family]
    if unknown:
        raise DomainError(
            "images given for non-members " + ", ".join(format_subset(t) for t in unknown)
        )
    shapes = {image.shape for image in secrets.values()}
    if len(shapes) != 1:
        raise DomainError(f"secret images differ in size: {sorted(shapes)}")
    missing = [t for t in family.ordered if t not in secrets]
    if missing:
        message = "no image for " + ", ".join(format_subset(t) for t in missing) + ", using white"
        warnings.warn(message, UserWarning)
        logger.info(message)
    codes = np.zeros(shapes.pop(), dtype=np.int64)
    for j, t in enumerate(family.ordered):
        if t in secrets:
            codes |= secrets[t].bits.astype(np.int64) << j
    return codes


def _encode_band(
    y: int, codes: np.ndarray, bases: np.ndarray, layout: Layout, seed: int
) -> np.ndarray:
    """Subpixel rows of every share for secret row ``y``, shape ``(n, rows, width * cols)``."""
    width = codes.shape[0]
    count, n, m = bases.shape
    words = np.random.Philox(key=seed + (y << 64)).random_raw(width * m).reshape(width, m)
    perms = np.argsort(words, axis=1, kind="stable")
    matrices = np.take_along_axis(bases[codes], perms[:, None, :], axis=2)
    cells = np.ones((width, n, layout.capacity), dtype=bool)
    cells[:, :, :m] = matrices
    cells = cells.reshape(width, n, layout.rows, layout.cols)
    return cells.transpose(1, 2, 0, 3).reshape(n, layout.rows, width * layout.cols)


def encode(
    secrets: Mapping[SubsetId, BitImage],
    table: SchemeTable,
    seed: int,
    layout: Optional[Layout] = None,
    scheduler: Optional[Scheduler] = None,
) -> ShareSet:
    """Encodes the secret images of the family members into ``n`` shares.

    Args:
        secrets (Mapping[SubsetId, BitImage]): Image per member, all of one size.
        table (SchemeTable): A certified table; it is certified again before use.
        seed (int): Generator seed, ``0 <= seed < 2**64``.
        layout (Optional[Layout]): Subpixel grid, near-square when omitted.
        scheduler (Optional[Scheduler]): Runs the secret rows.

    Returns:
        ShareSet: The shares with their layout, seed and the table fingerprint.

    Raises:
        VerificationError: if the table has not been certified or fails certification.
        DomainError: on mismatched images, an invalid seed or a layout too small.
    """
    if not table.verified:
        raise VerificationError("refusing to encode with an uncertified table, run verify first")
    _, cert = certify(table)
    if not cert.passed:
        raise VerificationError(
            f"table {table.fingerprint[:12]} is marked verified but fails certification "
            f"(contrast {cert.condition1.violations}, security {cert.condition2.violations} "
            "violations)"
        )
    if not 0 <= seed < SEED_LIMIT:
        raise DomainError(f"seed must lie within [0, 2**64), got {seed}")
    layout = layout or Layout.near_square(table.m)
    if layout.capacity < table.m:
        raise DomainError(f"layout {layout} holds {layout.capacity} < m = {table.m} subpixels")
    codes = pixel_codes(table, secrets)
    bases = np.stack([basis_matrix(p) for p in table.profiles])
    scheduler = scheduler or Scheduler()
    bands = scheduler.run(
        _encode_band,
        [(y, codes[y], bases, layout, seed) for y in range(codes.shape[0])],
        desc="encode",
        unit="row",
    )
    raster = np.concatenate(bands, axis=1)
    logger.debug("encoded %dx%d secrets into %d shares", codes.shape[1], codes.shape[0], table.n)
    return ShareSet(
        shares=tuple(BitImage(raster[i]) for i in range(table.n)),
        layout=layout,
        m=table.m,
        fingerprint=table.fingerprint,
        seed=seed,
    )


def stack(shares: ShareSet, which: SubsetId) -> BitImage:
    """Pixelwise OR of the shares of the transparencies in ``which``."""
    if which <= 0:
        raise DomainError("cannot stack an empty selection")
    if which >> shares.n:
        raise DomainError(f"{format_subset(which)} exceeds the {shares.n} transparencies")
    bits = np.zeros(shares.shares[0].shape, dtype=bool)
    for i in elements(which):
        bits |= shares[i].bits
    return BitImage(bits)


def _blocks(image: BitImage, height: int, width: int, layout: Layout) -> np.ndarray:
    """``(height, width, capacity)`` subpixels of every block, row-major within the block."""
    cells = image.bits.reshape(height, layout.rows, width, layout.cols)
    return cells.transpose(0, 2, 1, 3).reshape(height, width, layout.capacity)


def measure(stacked: BitImage, secret: BitImage, layout: Layout) -> Measurement:
    """Black subpixels per block of a stack, split by the colour of the secret pixel.

    Returns:
        Measurement: ``(l, h, alpha, m_effective)`` with ``alpha = (h - l) / capacity``.

    Raises:
        SchemeViolation: if the counts within one colour are not constant.
    """
    if stacked.shape != (secret.height * layout.rows, secret.width * layout.cols):
        raise DomainError(
            f"stack of {stacked.width}x{stacked.height} does not match the secret "
            f"{secret.width}x{secret.height} with layout {layout}"
        )
    counts = _blocks(stacked, secret.height, secret.width, layout).sum(axis=2)
    levels: List[Optional[int]] = []
    report: Dict[str, Any] = {}
    for colour, mask in (("white", ~secret.bits), ("black", secret.bits)):
        values = Counter(int(v) for v in counts[mask])
        report[colour] = {str(k): v for k, v in sorted(values.items())}
        levels.append(next(iter(values)) if len(values) == 1 else None)
        if len(values) > 1:
            raise SchemeViolation(
                f"{colour} pixels show {len(values)} different black counts", report=report
            )
    l, h = levels  # noqa: E741
    alpha = Fraction(h - l, layout.capacity) if h is not None and l is not None else None
    return Measurement(l=l, h=h, alpha=alpha, m_effective=layout.capacity)


def security_histogram(
    shares: ShareSet,
    which: SubsetId,
    secrets: Mapping[SubsetId, BitImage],
    table: SchemeTable,
) -> Dict[int, Counter]:
    """Restricted column multisets seen on the shares in ``which``, per colour assignment.

    For every secret pixel the block columns (the first ``m`` cells) are read off the selected
    shares and reduced to their support within ``which``; the resulting profile is counted under
    the pixel's assignment code.

    Returns:
        Dict[int, Counter]: Assignment code to a counter of profiles (tuples indexed by the
        compressed support).
    """
    if which <= 0 or which >> shares.n:
        raise DomainError(f"invalid selection {which:#b} for {shares.n} transparencies")
    codes = pixel_codes(table, secrets)
    height, width = codes.shape
    support = np.zeros((height, width, shares.m), dtype=np.int64)
    for k, i in enumerate(elements(which)):
        block = _blocks(shares[i], height, width, shares.layout)[:, :, : shares.m]
        support |= block.astype(np.int64) << k
    size = 1 << cardinality(which)
    histogram: Dict[int, Counter] = {}
    for (y, x), code in np.ndenumerate(codes):
        profile: Tuple[int, ...] = tuple(np.bincount(support[y, x], minlength=size).tolist())
        histogram.setdefault(int(code), Counter())[profile] += 1
    return histogram
