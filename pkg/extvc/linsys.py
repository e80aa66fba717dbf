"""The integer system ``M x = r`` linking column multiplicities of a basis matrix to the black
counts of stacked transparencies, its closed-form solution and the matching feasibility test."""
from typing import Any, Dict, List, Mapping, Sequence, Tuple
from dataclasses import dataclass

import numpy as np

from extvc.base import DomainError
from extvc.lattice import (
    SubsetId,
    check_n,
    full_set,
    nonempty_subsets,
    subset_from_json,
    subset_to_json,
)

__all__ = [
    "R_MAX",
    "MATRIX_MAX_N",
    "RVector",
    "PixelProfile",
    "subset_sums",
    "superset_sums",
    "superset_mobius",
    "build_m",
    "inverse_m",
    "solve_x",
    "check_nonnegative",
    "verify_solution",
]


R_MAX = 2**31
MATRIX_MAX_N = 10


def _masked_indices(n: int) -> List[Tuple[int, np.ndarray]]:
    masks = np.arange(1 << n, dtype=np.int64)
    return [(1 << i, masks[(masks >> i) & 1 == 0]) for i in range(n)]


def subset_sums(values: np.ndarray, n: int) -> np.ndarray:
    """Zeta transform over the subset lattice: ``out[A] = Σ_{T ⊆ A} values[T]``."""
    out = np.array(values, dtype=np.int64)
    for bit, idx in _masked_indices(n):
        out[idx | bit] += out[idx]
    return out


def superset_sums(values: np.ndarray, n: int) -> np.ndarray:
    """``out[S] = Σ_{S ⊆ T} values[T]``."""
    out = np.array(values, dtype=np.int64)
    for bit, idx in _masked_indices(n):
        out[idx] += out[idx | bit]
    return out


def superset_mobius(values: np.ndarray, n: int) -> np.ndarray:
    """Möbius transform over supersets: ``out[S] = Σ_{S ⊆ T} (-1)^(|T|-|S|) values[T]``."""
    out = np.array(values, dtype=np.int64)
    for bit, idx in _masked_indices(n):
        out[idx] -= out[idx | bit]
    return out


def _pairs_to_json(values: Sequence[int], start: int) -> List[List[Any]]:
    return [[subset_to_json(mask), int(values[mask])] for mask in range(start, len(values))]


def _pairs_from_json(n: int, pairs: Any, with_empty: bool) -> List[int]:
    values = [0] * (1 << n)
    seen = set()
    try:
        for items, value in pairs:
            mask = subset_from_json(items, n)
            if mask == 0 and not with_empty:
                raise DomainError("the empty set carries no value here")
            values[mask] = int(value)
            seen.add(mask)
    except (TypeError, ValueError) as e:
        if isinstance(e, DomainError):
            raise
        raise DomainError(f"malformed subset/value pairs: {e}") from e
    missing = set(nonempty_subsets(n)) - seen
    if missing:
        raise DomainError(f"missing values for {len(missing)} subsets")
    return values


@dataclass(frozen=True)
class RVector:
    """Black subpixel counts ``r_S`` of the stacked transparencies ``S``, for every nonempty ``S``.

    ``values`` is indexed by mask; ``values[0]`` is ``r_∅ = 0``.
    """

    n: int
    values: Tuple[int, ...]

    def __post_init__(self) -> None:
        check_n(self.n)
        values = tuple(int(v) for v in self.values)
        if len(values) != 1 << self.n:
            raise DomainError(f"expecting {1 << self.n} values, got {len(values)}")
        if values[0] != 0:
            raise DomainError("r of the empty set is fixed at 0")
        if any(v < 0 or v > R_MAX for v in values):
            raise DomainError(f"r values must lie within [0, {R_MAX}]")
        object.__setattr__(self, "values", values)

    @classmethod
    def from_map(cls, n: int, mapping: Mapping[SubsetId, int]) -> "RVector":
        values = [0] * (1 << check_n(n))
        for mask in nonempty_subsets(n):
            if mask not in mapping:
                raise DomainError(f"missing r value for subset {subset_to_json(mask)}")
            values[mask] = mapping[mask]
        return cls(n, tuple(values))

    @classmethod
    def of(cls, n: int, ordered: Sequence[int]) -> "RVector":
        """From values listed in canonical subset order."""
        return cls(n, (0,) + tuple(ordered))

    def __getitem__(self, mask: SubsetId) -> int:
        return self.values[mask]

    def as_array(self) -> np.ndarray:
        return np.array(self.values, dtype=np.int64)

    def to_json(self) -> Dict[str, Any]:
        return {"n": self.n, "values": _pairs_to_json(self.values, 1)}

    @classmethod
    def from_json(cls, doc: Mapping[str, Any]) -> "RVector":
        n = check_n(doc["n"])
        return cls(n, tuple(_pairs_from_json(n, doc["values"], with_empty=False)))


@dataclass(frozen=True)
class PixelProfile:
    """Column multiset of one basis matrix: ``counts[U]`` columns are black exactly on the rows in
    ``U``. ``counts[0]`` holds the all-white padding columns. Counts may be negative when produced
    by :func:`solve_x`; :attr:`nonnegative` tells whether the profile is realizable."""

    n: int
    counts: Tuple[int, ...]

    def __post_init__(self) -> None:
        check_n(self.n)
        counts = tuple(int(c) for c in self.counts)
        if len(counts) != 1 << self.n:
            raise DomainError(f"expecting {1 << self.n} counts, got {len(counts)}")
        object.__setattr__(self, "counts", counts)

    @classmethod
    def from_map(cls, n: int, mapping: Mapping[SubsetId, int]) -> "PixelProfile":
        counts = [0] * (1 << check_n(n))
        for mask, count in mapping.items():
            if not 0 <= mask < len(counts):
                raise DomainError(f"subset {mask:#b} is outside of {{1..{n}}}")
            counts[mask] += count
        return cls(n, tuple(counts))

    @property
    def m(self) -> int:
        return sum(self.counts)

    @property
    def nonnegative(self) -> bool:
        return min(self.counts) >= 0

    def __getitem__(self, mask: SubsetId) -> int:
        return self.counts[mask]

    def as_array(self) -> np.ndarray:
        return np.array(self.counts, dtype=np.int64)

    def support(self) -> List[Tuple[SubsetId, int]]:
        """``(mask, count)`` for every column support actually used, canonical order."""
        return [(mask, c) for mask, c in enumerate(self.counts) if c]

    def padded(self, white: int = 0, black: int = 0) -> "PixelProfile":
        """Adds ``white`` all-white and ``black`` all-black columns."""
        counts = list(self.counts)
        counts[0] += white
        counts[full_set(self.n)] += black
        return PixelProfile(self.n, tuple(counts))

    def to_json(self) -> Dict[str, Any]:
        return {"n": self.n, "counts": _pairs_to_json(self.counts, 0)}

    @classmethod
    def from_json(cls, doc: Mapping[str, Any]) -> "PixelProfile":
        n = check_n(doc["n"])
        counts = [0] * (1 << n)
        try:
            for items, value in doc["counts"]:
                counts[subset_from_json(items, n)] = int(value)
        except (TypeError, ValueError, KeyError) as e:
            if isinstance(e, DomainError):
                raise
            raise DomainError(f"malformed profile: {e}") from e
        return cls(n, tuple(counts))


def build_m(n: int) -> np.ndarray:
    """Inclusion matrix ``M_n``, ``M[S, T] = 1`` iff ``S ∩ T ≠ ∅``, rows and columns in canonical
    order. Kept explicit for small ``n`` only (``n <= 10``).
    """
    check_n(n, MATRIX_MAX_N)
    masks = np.array(nonempty_subsets(n), dtype=np.int64)
    return ((masks[:, None] & masks[None, :]) != 0).astype(np.int64)


def inverse_m(n: int) -> np.ndarray:
    """``M_n^{-1}`` by block recursion from ``M_1^{-1} = (1)``::

        M_{n+1}^{-1} = [[ 0,          -M^{-1} e,  M^{-1}  ],
                        [ -e' M^{-1},  0,         e' M^{-1}],
                        [ M^{-1},      M^{-1} e, -M^{-1}  ]]

    which relies on ``e' M_n^{-1} e = 1``. All entries are in ``{-1, 0, 1}``.
    """
    check_n(n, MATRIX_MAX_N)
    inv = np.ones((1, 1), dtype=np.int64)
    for _ in range(1, n):
        col = inv.sum(axis=1, keepdims=True)
        row = inv.sum(axis=0, keepdims=True)
        inv = np.block(
            [
                [np.zeros_like(inv), -col, inv],
                [-row, np.zeros((1, 1), dtype=np.int64), row],
                [inv, col, -inv],
            ]
        )
    return inv


def solve_x(r: RVector) -> PixelProfile:
    """Unique solution of ``M x = r``:

    ``x_S = Σ_{{1..n}\\S ⊆ T} (-1)^(|T|+|S|+n+1) r_T`` for nonempty ``S``, ``x_∅ = 0``.

    The alternating sum over the interval above ``{1..n}\\S`` equals minus the superset Möbius
    transform of ``r`` at the complement, which is how it is evaluated here. Entries may come out
    negative; see :func:`check_nonnegative`.
    """
    full = full_set(r.n)
    mobius = superset_mobius(r.as_array(), r.n)
    masks = np.arange(1 << r.n, dtype=np.int64)
    counts = -mobius[full ^ masks]
    counts[0] = 0
    return PixelProfile(r.n, tuple(counts.tolist()))


def check_nonnegative(r: RVector) -> List[SubsetId]:
    """Every ``S ⊊ {1..n}`` (``∅`` included) with ``Σ_{S ⊆ T} (-1)^(|S|+|T|) r_T > 0``. The list is
    empty iff :func:`solve_x` yields a non-negative profile."""
    mobius = superset_mobius(r.as_array(), r.n)
    return [int(s) for s in np.flatnonzero(mobius[: full_set(r.n)] > 0)]


def verify_solution(r: RVector, x: PixelProfile) -> bool:
    """Evaluates ``M x`` and compares with ``r``; ``x_∅`` never contributes."""
    if r.n != x.n:
        raise DomainError(f"ground-set mismatch: r has n={r.n}, x has n={x.n}")
    counts = x.as_array()
    counts[0] = 0
    sums = subset_sums(counts, r.n)
    full = full_set(r.n)
    masks = np.arange(1 << r.n, dtype=np.int64)
    # columns meeting S = all columns minus those inside the complement of S
    hits = int(counts.sum()) - sums[full ^ masks]
    return bool(np.array_equal(hits[1:], r.as_array()[1:]))
