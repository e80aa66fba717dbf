"""Subset algebra on the ground set {1..n}: subsets are ``int`` bitmasks (bit ``i-1`` set iff
transparency ``i`` belongs to the subset), families are :class:`SubsetFamily` objects."""
from typing import Dict, FrozenSet, Iterable, Iterator, List, Sequence, Tuple, Union
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import permutations

from extvc.base import DomainError

__all__ = [
    "MAX_N",
    "SubsetId",
    "SubsetFamily",
    "check_n",
    "full_set",
    "cardinality",
    "elements",
    "from_elements",
    "is_subset",
    "complement",
    "nonempty_subsets",
    "subset_index",
    "subset_at",
    "subsets_of",
    "interval_subsets",
    "parity_sign",
    "compress",
    "expand",
    "permute",
    "format_subset",
    "subset_to_json",
    "subset_from_json",
]


MAX_N = 16

SubsetId = int


def check_n(n: int, max_n: int = MAX_N) -> int:
    if not isinstance(n, int) or isinstance(n, bool) or not 1 <= n <= max_n:
        raise DomainError(f"ground-set size must be within [1, {max_n}], got {n!r}")
    return n


def full_set(n: int) -> SubsetId:
    return (1 << n) - 1


def cardinality(mask: SubsetId) -> int:
    return bin(mask).count("1")


def elements(mask: SubsetId) -> List[int]:
    """Sorted (1-based) elements of a subset, e.g. ``elements(0b101) == [1, 3]``."""
    out = []
    i = 1
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return out


def from_elements(items: Iterable[int], n: int) -> SubsetId:
    mask = 0
    for item in items:
        if isinstance(item, bool) or not isinstance(item, int) or not 1 <= item <= n:
            raise DomainError(f"element {item!r} outside of {{1..{n}}}")
        mask |= 1 << (item - 1)
    return mask


def is_subset(a: SubsetId, b: SubsetId) -> bool:
    return a & ~b == 0


def complement(mask: SubsetId, n: int) -> SubsetId:
    return full_set(n) & ~mask


@lru_cache(maxsize=None)
def _block_order(n: int) -> Tuple[SubsetId, ...]:
    if n == 1:
        return (1,)
    lower = _block_order(n - 1)
    top = 1 << (n - 1)
    return lower + (top,) + tuple(s | top for s in lower)


def nonempty_subsets(n: int) -> List[SubsetId]:
    """All ``2**n - 1`` nonempty subsets in the recursive block order: the nonempty subsets of
    ``{1..n-1}``, then ``{n}``, then each of those subsets joined with ``n``.

    The block order coincides with ascending mask order, hence :func:`subset_index` is simply
    ``mask - 1``.

    Args:
        n (int): Ground-set size, ``1 <= n <= 16``.

    Returns:
        List[SubsetId]: Subsets in canonical order.
    """
    return list(_block_order(check_n(n)))


def subset_index(mask: SubsetId) -> int:
    """Position of a nonempty subset in the canonical order."""
    if mask <= 0:
        raise DomainError("the empty set has no canonical index")
    return mask - 1


def subset_at(index: int) -> SubsetId:
    if index < 0:
        raise DomainError(f"negative subset index {index}")
    return index + 1


def subsets_of(mask: SubsetId) -> List[SubsetId]:
    """Every ``S ⊆ mask`` (including the empty set and ``mask`` itself), ascending."""
    subs = []
    sub = mask
    while True:
        subs.append(sub)
        if sub == 0:
            break
        sub = (sub - 1) & mask
    subs.reverse()
    return subs


def interval_subsets(lo: SubsetId, hi: SubsetId) -> List[SubsetId]:
    """Every ``T`` with ``lo ⊆ T ⊆ hi``, each exactly once, ascending.

    Raises:
        DomainError: if ``lo`` is not contained in ``hi``.
    """
    if not is_subset(lo, hi):
        raise DomainError(f"{format_subset(lo)} is not a subset of {format_subset(hi)}")
    return [lo | s for s in subsets_of(hi & ~lo)]


def parity_sign(a: SubsetId, b: SubsetId, n: int) -> int:
    """``(-1) ** (|a| + |b| + n + 1)``."""
    return -1 if (cardinality(a) + cardinality(b) + n + 1) % 2 else 1


def compress(mask: SubsetId, support: SubsetId) -> SubsetId:
    """Relabels a subset of ``support`` onto ``{1..|support|}`` keeping the element order."""
    if not is_subset(mask, support):
        raise DomainError(f"{format_subset(mask)} is not within {format_subset(support)}")
    out = 0
    for pos, item in enumerate(elements(support)):
        if mask >> (item - 1) & 1:
            out |= 1 << pos
    return out


def expand(mask: SubsetId, support: SubsetId) -> SubsetId:
    """Inverse of :func:`compress`."""
    items = elements(support)
    if mask >> len(items):
        raise DomainError(f"{format_subset(mask)} does not fit into {format_subset(support)}")
    out = 0
    for pos, item in enumerate(items):
        if mask >> pos & 1:
            out |= 1 << (item - 1)
    return out


def permute(mask: SubsetId, perm: Sequence[int]) -> SubsetId:
    """Relabels transparencies, element ``i`` goes to ``perm[i - 1]`` (1-based images)."""
    out = 0
    for item in elements(mask):
        out |= 1 << (perm[item - 1] - 1)
    return out


def format_subset(mask: SubsetId) -> str:
    if mask == 0:
        return "∅"
    return "{" + ",".join(str(i) for i in elements(mask)) + "}"


def subset_to_json(mask: SubsetId) -> List[int]:
    return elements(mask)


def subset_from_json(items: Sequence[int], n: int) -> SubsetId:
    if not isinstance(items, (list, tuple)):
        raise DomainError(f"subsets are lists of elements, got {items!r}")
    return from_elements(items, n)


MemberLike = Union[SubsetId, Sequence[int]]


@dataclass(frozen=True)
class SubsetFamily:
    """A deduplicated family of nonempty subsets of ``{1..n}``.

    Members are iterated in canonical order. Colour assignments over the family are ``int`` codes
    whose bit ``j`` refers to the ``j``-th member in that order.
    """

    n: int
    members: FrozenSet[SubsetId] = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        check_n(self.n)
        members = frozenset(self.members)
        top = full_set(self.n)
        for member in members:
            if isinstance(member, bool) or not isinstance(member, int):
                raise DomainError(f"family members must be bitmasks, got {member!r}")
            if member == 0:
                raise DomainError("the empty set cannot be a family member")
            if member & ~top:
                raise DomainError(f"subset {member:#b} is outside of {{1..{self.n}}}")
        object.__setattr__(self, "members", members)

    @classmethod
    def from_json(cls, n: int, lists: Iterable[Sequence[int]]) -> "SubsetFamily":
        return cls(n, frozenset(subset_from_json(items, n) for items in lists))

    def to_json(self) -> List[List[int]]:
        return [subset_to_json(m) for m in self.ordered]

    @classmethod
    def all(cls, n: int) -> "SubsetFamily":
        return cls(n, frozenset(nonempty_subsets(n)))

    @classmethod
    def all_but_top(cls, n: int) -> "SubsetFamily":
        return cls(n, frozenset(nonempty_subsets(n)) - {full_set(n)})

    @property
    def ordered(self) -> List[SubsetId]:
        return sorted(self.members, key=subset_index)

    @property
    def top(self) -> SubsetId:
        return full_set(self.n)

    @property
    def union(self) -> SubsetId:
        out = 0
        for member in self.members:
            out |= member
        return out

    @property
    def positions(self) -> Dict[SubsetId, int]:
        return {m: j for j, m in enumerate(self.ordered)}

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self) -> Iterator[SubsetId]:
        return iter(self.ordered)

    def __contains__(self, mask: object) -> bool:
        return mask in self.members

    def __str__(self) -> str:
        return "{" + ", ".join(format_subset(m) for m in self.ordered) + "}"

    def restrict(self, t: SubsetId) -> "SubsetFamily":
        """``𝔖 ∩ P(t)``, on the same ground set."""
        return SubsetFamily(self.n, frozenset(m for m in self.members if is_subset(m, t)))

    def assignments(self) -> range:
        """All ``2**|𝔖|`` colour assignment codes."""
        return range(1 << len(self.members))

    def blacks(self, code: int) -> List[SubsetId]:
        """Members whose image is black under assignment ``code``."""
        return [m for j, m in enumerate(self.ordered) if code >> j & 1]

    def encode(self, blacks: Iterable[SubsetId]) -> int:
        positions = self.positions
        code = 0
        for mask in blacks:
            if mask not in positions:
                raise DomainError(f"{format_subset(mask)} is not a family member")
            code |= 1 << positions[mask]
        return code

    def within_mask(self, q: SubsetId) -> int:
        """Assignment bits of the members contained in ``q``; ``code & within_mask(q)`` is the
        colour assignment restricted to ``P(q)``."""
        return sum(1 << j for j, m in enumerate(self.ordered) if is_subset(m, q))

    def permuted(self, perm: Sequence[int]) -> "SubsetFamily":
        if sorted(perm) != list(range(1, self.n + 1)):
            raise DomainError(f"{list(perm)} is not a permutation of 1..{self.n}")
        return SubsetFamily(self.n, frozenset(permute(m, perm) for m in self.members))

    def signature(self) -> Tuple[SubsetId, ...]:
        return tuple(self.ordered)

    def canonical(self) -> "SubsetFamily":
        """Representative of the family's orbit under relabelling of transparencies (the
        permutation giving the smallest sorted member tuple)."""
        best = None
        for perm in permutations(range(1, self.n + 1)):
            sig = tuple(sorted(permute(m, perm) for m in self.members))
            if best is None or sig < best:
                best = sig
        return SubsetFamily(self.n, frozenset(best or ()))
