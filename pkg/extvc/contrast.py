"""Contrast-level calculus: existence inequalities, tight levels, expansion bounds, the contrast
trade-off and the adjusted levels of the improved (even subset) construction."""
from typing import Any, Dict, List, Mapping, Optional, Tuple, Union
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from math import floor, gcd
import logging

import numpy as np

from extvc.base import (
    DomainError,
    InfeasibleError,
    PreconditionError,
    fraction_from_json,
    fraction_to_json,
)
from extvc.lattice import (
    SubsetFamily,
    SubsetId,
    cardinality,
    check_n,
    format_subset,
    full_set,
    is_subset,
    nonempty_subsets,
    subset_from_json,
    subset_to_json,
    subsets_of,
)
from extvc.linsys import superset_sums

__all__ = [
    "Levels",
    "ContrastSpec",
    "DeltaSpec",
    "existence_slack",
    "existence_check",
    "tight_levels",
    "tighten",
    "lower_bound",
    "droste_expansion",
    "alphas",
    "tradeoff_sum",
    "realize_contrast",
    "corollary6_applies",
    "theorem7_candidates",
    "relief_subsets",
    "theorem7_levels",
    "sublattice_bound",
]


logger = logging.getLogger(__name__)

Rational = Union[Fraction, int, str]


@dataclass(frozen=True)
class Levels:
    """Full level map: ``(h[T], l[T])`` for every nonempty ``T``, indexed by mask (index 0 unused
    and fixed at 0). ``h`` is the stacked black count over a black secret pixel, ``l`` over a white
    one. Off-family subsets carry levels too; only ``h, l >= 0`` is enforced here."""

    n: int
    h: Tuple[int, ...]
    l: Tuple[int, ...]  # noqa: E741

    def __post_init__(self) -> None:
        check_n(self.n)
        size = 1 << self.n
        h = tuple(int(v) for v in self.h)
        l = tuple(int(v) for v in self.l)  # noqa: E741
        if len(h) != size or len(l) != size:
            raise DomainError(f"expecting {size} levels per colour")
        if h[0] or l[0]:
            raise DomainError("levels of the empty set are fixed at 0")
        if min(h) < 0 or min(l) < 0:
            raise DomainError("levels must be non-negative")
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "l", l)

    @classmethod
    def from_map(cls, n: int, mapping: Mapping[SubsetId, Tuple[int, int]]) -> "Levels":
        h = [0] * (1 << check_n(n))
        l = [0] * (1 << n)  # noqa: E741
        for mask in nonempty_subsets(n):
            if mask not in mapping:
                raise DomainError(f"missing levels for {format_subset(mask)}")
            h[mask], l[mask] = mapping[mask]
        return cls(n, tuple(h), tuple(l))

    def __getitem__(self, mask: SubsetId) -> Tuple[int, int]:
        return self.h[mask], self.l[mask]

    def delta(self, mask: SubsetId) -> int:
        return self.h[mask] - self.l[mask]

    @property
    def deltas(self) -> Tuple[int, ...]:
        return tuple(h - l for h, l in zip(self.h, self.l))

    @property
    def top(self) -> int:
        """``max(h, l)`` of the full stack."""
        full = full_set(self.n)
        return max(self.h[full], self.l[full])

    def shifted(self, k: int) -> "Levels":
        """Levels after adding ``k`` always-black columns."""
        return Levels(
            self.n, (0,) + tuple(v + k for v in self.h[1:]), (0,) + tuple(v + k for v in self.l[1:])
        )

    def as_map(self) -> Dict[SubsetId, Tuple[int, int]]:
        return {mask: self[mask] for mask in nonempty_subsets(self.n)}

    def to_json(self) -> List[List[Any]]:
        return [[subset_to_json(m), self.h[m], self.l[m]] for m in nonempty_subsets(self.n)]

    @classmethod
    def from_json(cls, n: int, rows: Any) -> "Levels":
        try:
            mapping = {subset_from_json(s, n): (int(h), int(l)) for s, h, l in rows}
        except (TypeError, ValueError) as e:
            if isinstance(e, DomainError):
                raise
            raise DomainError(f"malformed levels: {e}") from e
        return cls.from_map(n, mapping)


@dataclass(frozen=True)
class ContrastSpec:
    """Per-image targets ``(h_T, l_T)`` for ``T ∈ 𝔖`` with ``h_T > l_T >= 0``."""

    family: SubsetFamily
    levels: Mapping[SubsetId, Tuple[int, int]]

    def __post_init__(self) -> None:
        if set(self.levels) != set(self.family.members):
            raise DomainError("contrast targets must cover exactly the family members")
        for mask, (h, l) in self.levels.items():  # noqa: E741
            if not h > l >= 0:
                raise DomainError(f"{format_subset(mask)}: need h > l >= 0, got ({h}, {l})")

    @property
    def n(self) -> int:
        return self.family.n

    def delta(self) -> "DeltaSpec":
        return DeltaSpec.from_map(self.n, {m: h - l for m, (h, l) in self.levels.items()})

    @classmethod
    def from_levels(cls, family: SubsetFamily, levels: Levels) -> "ContrastSpec":
        return cls(family, {m: levels[m] for m in family.members})


@dataclass(frozen=True)
class DeltaSpec:
    """``δ_T >= 0`` for every nonempty ``T``; ``δ_T = 0`` marks ``T ∉ 𝔖``."""

    n: int
    deltas: Tuple[int, ...]

    def __post_init__(self) -> None:
        check_n(self.n)
        deltas = tuple(int(d) for d in self.deltas)
        if len(deltas) != 1 << self.n or deltas[0] != 0:
            raise DomainError(f"expecting {1 << self.n} deltas with δ_∅ = 0")
        if min(deltas) < 0:
            raise DomainError("deltas must be non-negative")
        object.__setattr__(self, "deltas", deltas)

    @classmethod
    def from_map(cls, n: int, mapping: Mapping[SubsetId, int]) -> "DeltaSpec":
        deltas = [0] * (1 << check_n(n))
        for mask, value in mapping.items():
            if not 0 < mask < len(deltas):
                raise DomainError(f"subset {mask:#b} is outside of {{1..{n}}}")
            deltas[mask] = value
        return cls(n, tuple(deltas))

    @classmethod
    def for_family(cls, family: SubsetFamily, value: int = 1) -> "DeltaSpec":
        return cls.from_map(family.n, {m: value for m in family.members})

    def __getitem__(self, mask: SubsetId) -> int:
        return self.deltas[mask]

    @property
    def family(self) -> SubsetFamily:
        return SubsetFamily(self.n, frozenset(m for m, d in enumerate(self.deltas) if d > 0))

    def as_array(self) -> np.ndarray:
        return np.array(self.deltas, dtype=np.int64)

    def to_json(self) -> Dict[str, Any]:
        return {
            "n": self.n,
            "deltas": [[subset_to_json(m), d] for m, d in enumerate(self.deltas) if d],
        }

    @classmethod
    def from_json(cls, doc: Mapping[str, Any]) -> "DeltaSpec":
        n = check_n(doc["n"])
        try:
            return cls.from_map(n, {subset_from_json(s, n): int(d) for s, d in doc["deltas"]})
        except (TypeError, ValueError, KeyError) as e:
            if isinstance(e, DomainError):
                raise
            raise DomainError(f"malformed deltas: {e}") from e


def _cardinalities(n: int) -> np.ndarray:
    return np.array([cardinality(m) for m in range(1 << n)], dtype=np.int64)


def existence_slack(levels: Levels) -> np.ndarray:
    """``RHS - LHS`` of the existence inequality for every ``S ⊊ {1..n}`` (indexed by mask),

    ``Σ_{S ⊆ T, |T| ≡ |S|} h_T  <=  Σ_{S ⊆ T, |T| ≢ |S|} l_T``  with ``h_∅ = l_∅ = 0``.
    """
    n = levels.n
    card = _cardinalities(n)
    h = np.array(levels.h, dtype=np.int64)
    l = np.array(levels.l, dtype=np.int64)  # noqa: E741
    even_lhs = np.where(card % 2 == 0, h, -l)
    odd_lhs = np.where(card % 2 == 1, h, -l)
    lhs_minus_rhs = np.where(card % 2 == 0, superset_sums(even_lhs, n), superset_sums(odd_lhs, n))
    return -lhs_minus_rhs[: full_set(n)]


def existence_check(levels: Levels) -> List[SubsetId]:
    """Every ``S ⊊ {1..n}`` (``∅`` included) at which the existence inequality fails; an empty
    list means some scheme with these levels exists as long as every ``h_T >= l_T``. A negative
    delta needs more than this, see :func:`relief_subsets`.

    Args:
        levels (Levels): Full level map.

    Returns:
        List[SubsetId]: Violating subsets, ascending.
    """
    return [int(s) for s in np.flatnonzero(existence_slack(levels) < 0)]


def _weighted_levels(deltas: np.ndarray, n: int, scope: Optional[np.ndarray] = None) -> np.ndarray:
    """``Σ_{T'} δ_T' 2^(|T'|-1) - Σ_{T ⊊ T'} δ_T' 2^(|T'|-1-|T|)`` over the ``T'`` in ``scope``
    (a boolean mask over subsets, everything when omitted). Index 0 is left at 0."""
    card = _cardinalities(n)
    weights = np.where(card > 0, deltas.astype(np.int64) << np.maximum(card - 1, 0), 0)
    if scope is not None:
        weights = np.where(scope, weights, 0)
    above = superset_sums(weights, n) - weights
    # every T' strictly above T has |T'| > |T|, so the shift is exact
    levels = int(weights.sum()) - (above >> card)
    levels[0] = 0
    return levels


def tight_levels(delta: DeltaSpec) -> Levels:
    """The unique levels meeting every existence inequality with equality:

    ``h_T = Σ_{T'} δ_T' 2^(|T'|-1) - Σ_{T ⊊ T'} δ_T' 2^(|T'|-1-|T|)``, ``l_T = h_T - δ_T``.
    """
    h = _weighted_levels(delta.as_array(), delta.n)
    return Levels(delta.n, tuple(h.tolist()), tuple((h - delta.as_array()).tolist()))


def tighten(levels: Levels) -> Levels:
    """Lowers ``(h_T, l_T)`` by one for every ``T ⊄ S`` once per unit of slack at ``S``, until
    every existence inequality holds with equality. Deltas are preserved and the full-stack count
    never increases; the result coincides with :func:`tight_levels` of the same deltas.

    Raises:
        InfeasibleError: if the input violates some existence inequality.
    """
    if min(levels.deltas) < 0:
        raise DomainError("tightening needs h >= l everywhere")
    slack = existence_slack(levels)
    if (slack < 0).any():
        raise InfeasibleError(
            "levels violate the existence inequalities",
            violations=[int(s) for s in np.flatnonzero(slack < 0)],
        )
    n = levels.n
    padded = np.zeros(1 << n, dtype=np.int64)
    padded[: full_set(n)] = slack
    # T is lowered once for each proper S not containing it
    shift = int(padded.sum()) - superset_sums(padded, n)
    shift[0] = 0
    h = np.array(levels.h, dtype=np.int64) - shift
    l = np.array(levels.l, dtype=np.int64) - shift  # noqa: E741
    return Levels(n, tuple(h.tolist()), tuple(l.tolist()))


def lower_bound(n: int) -> int:
    """Minimum pixel expansion of any scheme for the full family, ``(3**n - 1) / 2``."""
    if n < 1:
        raise DomainError(f"n must be positive, got {n}")
    return (3**n - 1) // 2


def droste_expansion(family: SubsetFamily) -> int:
    return sum(1 << (cardinality(m) - 1) for m in family.members)


def alphas(
    levels: Levels, m: int, family: Optional[SubsetFamily] = None
) -> Dict[SubsetId, Fraction]:
    """Exact contrasts ``(h_T - l_T) / m`` of the family members (or of every ``T`` with a nonzero
    delta when no family is given)."""
    if m <= 0:
        raise DomainError("pixel expansion must be positive")
    masks = family.ordered if family is not None else [
        t for t in nonempty_subsets(levels.n) if levels.delta(t)
    ]
    return {t: Fraction(levels.delta(t), m) for t in masks}


def tradeoff_sum(alphas: Mapping[SubsetId, Rational]) -> Fraction:
    """``Σ_T 2^(|T|-1) α_T``; achievable contrasts keep it at most 1."""
    total = Fraction(0)
    for mask, alpha in alphas.items():
        value = Fraction(alpha)
        if value < 0:
            raise DomainError(f"negative contrast for {format_subset(mask)}")
        total += (1 << (cardinality(mask) - 1)) * value
    return total


def _lcm(values: List[int]) -> int:
    return reduce(lambda a, b: a * b // gcd(a, b), values, 1)


def realize_contrast(
    alphas_target: Mapping[SubsetId, Rational], epsilon: Rational, n: Optional[int] = None
) -> Tuple[DeltaSpec, int]:
    """Finds integer deltas and an expansion ``M`` whose contrasts ``δ_T / M`` undershoot the
    targets by less than ``epsilon`` (or hit them exactly when ``epsilon`` is 0).

    ``M`` is scanned upwards with ``δ_T = floor(α_T M)``; the first ``M`` within tolerance wins, so
    the result is the smallest such ``M``. Because ``δ_T / M <= α_T``, the trade-off sum of the
    realization never exceeds the target's, i.e. ``Σ 2^(|T|-1) δ_T <= M`` and the tight scheme for
    ``δ`` fits in ``M`` subpixels once padded with always-black columns.

    Args:
        alphas_target (Mapping[SubsetId, Rational]): Target contrast per subset.
        epsilon (Rational): Tolerance, ``>= 0``.
        n (Optional[int]): Ground-set size, inferred from the largest subset when omitted.

    Returns:
        Tuple[DeltaSpec, int]: Deltas and the expansion ``M``.

    Raises:
        InfeasibleError: if the targets violate the trade-off.
    """
    targets = {mask: Fraction(alpha) for mask, alpha in alphas_target.items()}
    tolerance = Fraction(epsilon)
    if tolerance < 0:
        raise DomainError("epsilon must be non-negative")
    if not targets:
        raise DomainError("no contrast targets given")
    if n is None:
        n = max(mask.bit_length() for mask in targets)
    check_n(n)
    total = tradeoff_sum(targets)
    if total > 1:
        raise InfeasibleError(f"contrast trade-off sum {total} exceeds 1")
    if tolerance > 0:
        limit = floor(1 / tolerance) + 1
    else:
        limit = _lcm([alpha.denominator for alpha in targets.values()])
    for expansion in range(1, limit + 1):
        deltas = {mask: floor(alpha * expansion) for mask, alpha in targets.items()}
        error = max(alpha - Fraction(deltas[mask], expansion) for mask, alpha in targets.items())
        if error == 0 or error < tolerance:
            logger.debug("realized contrasts with M=%d (error %s)", expansion, error)
            return DeltaSpec.from_map(n, deltas), expansion
    raise AssertionError("scan bound always admits a realization")  # pragma: no cover


def corollary6_applies(family: SubsetFamily) -> bool:
    """Even ``n``, full stack not in the family, and the family not confined to ``P(S)`` of a proper
    ``S``: the setting where the straightforward construction is known not to be optimal."""
    return family.n % 2 == 0 and family.top not in family and family.union == family.top


def theorem7_candidates(family: SubsetFamily) -> List[SubsetId]:
    """Even-sized ``t ∉ 𝔖`` whose subsets in the family are not all inside a proper subset of
    ``t``, smallest first (ties by mask)."""
    found = []
    for t in nonempty_subsets(family.n):
        if cardinality(t) % 2 or t in family:
            continue
        if family.restrict(t).union == t:
            found.append(t)
    return sorted(found, key=lambda t: (cardinality(t), t))


def relief_subsets(family: SubsetFamily, t_even: SubsetId) -> List[SubsetId]:
    """Even-sized ``u ⊆ t`` outside the family whose odd-sized subsets each lie in a member inside
    ``u``; ``t`` itself first, then smallest first.

    Lowering the stack of such a ``u`` by one in the assignments where ``𝔖 ∩ P(u)`` has its even
    members black and its odd members white keeps every profile of the improved construction
    non-negative. Without one, the adjusted levels around ``t`` have no realization.
    """
    found = []
    for u in subsets_of(t_even):
        if not u or cardinality(u) % 2 or u in family:
            continue
        inside = family.restrict(u).members
        if all(
            any(is_subset(s, m) for m in inside) for s in subsets_of(u) if cardinality(s) % 2
        ):
            found.append(u)
    return sorted(found, key=lambda u: (u != t_even, cardinality(u), u))


def theorem7_levels(
    family: SubsetFamily, t_even: SubsetId, relief: Optional[SubsetId] = None
) -> Levels:
    """Adjusted levels of the improved construction around an even ``t ∉ 𝔖``.

    The scheme pairs an inner scheme on the transparencies of ``t`` for ``𝔖 ∩ P(t)`` (tight
    levels lowered by one, and the stack of ``relief`` lowered by one more, so ``δ_relief = -1``)
    with the straightforward blocks for every member not inside ``t``; rows outside ``t`` are black
    in the inner part. With ``inner``/``outer`` the tight levels of both parts:

    - ``ĥ_S = inner_S - 1 + outer_S`` for ``S ⊆ t``, ``S != relief``,
    - ``ĥ_relief = inner_relief - 2 + outer_relief``,
    - ``ĥ_S = inner_t - 1 + outer_S`` for ``S ⊄ t``,

    and ``l̂_S = ĥ_S - δ_S``. ``relief`` defaults to ``t``.

    Raises:
        PreconditionError: with ``clause`` one of ``"member"``, ``"parity"``, ``"covering"``, or
            ``"relief"`` when ``relief`` is not an even subset of ``t`` outside the family.
    """
    n = family.n
    if not 0 < t_even <= full_set(n):
        raise DomainError(f"{t_even:#b} is not a nonempty subset of {{1..{n}}}")
    if t_even in family:
        raise PreconditionError(f"{format_subset(t_even)} belongs to the family", clause="member")
    if cardinality(t_even) % 2:
        raise PreconditionError(f"{format_subset(t_even)} has odd size", clause="parity")
    inner_family = family.restrict(t_even)
    if inner_family.union != t_even:
        raise PreconditionError(
            f"the family members inside {format_subset(t_even)} all fit into the proper subset "
            f"{format_subset(inner_family.union)}",
            clause="covering",
        )
    if relief is None:
        relief = t_even
    if not relief or not is_subset(relief, t_even) or cardinality(relief) % 2 or relief in family:
        raise PreconditionError(
            f"{format_subset(relief)} is no even subset of {format_subset(t_even)} outside the "
            "family",
            clause="relief",
        )
    delta = DeltaSpec.for_family(family).as_array()
    inside = np.array([is_subset(m, t_even) for m in range(1 << n)])
    inner = _weighted_levels(delta, n, scope=inside)
    outer = _weighted_levels(delta, n, scope=~inside)
    h = np.empty(1 << n, dtype=np.int64)
    for s in range(1, 1 << n):
        if s == relief:
            h[s] = inner[s] - 2 + outer[s]
        elif is_subset(s, t_even):
            h[s] = inner[s] - 1 + outer[s]
        else:
            h[s] = inner[t_even] - 1 + outer[s]
    h[0] = 0
    delta[relief] = -1
    levels = Levels(n, tuple(h.tolist()), tuple((h - delta).tolist()))
    logger.debug("adjusted levels around %s: top %d", format_subset(t_even), levels.top)
    return levels


def sublattice_bound(family: SubsetFamily, delta: DeltaSpec) -> int:
    """Lower bound on the expansion of any scheme: the largest ``δ_T`` and, for every ``Q`` whose
    nonempty subsets all carry a positive delta, the tight full-stack count ``Σ δ_U 2^(|U|-1)``
    of the full scheme on ``Q``."""
    positive = {m for m in family.members if delta[m] > 0}
    bound = max((delta[m] for m in positive), default=0)
    for q in nonempty_subsets(family.n):
        subs = [u for u in nonempty_subsets(family.n) if is_subset(u, q)]
        if all(u in positive for u in subs):
            bound = max(bound, sum(delta[u] << (cardinality(u) - 1) for u in subs))
    return bound


def contrast_to_json(values: Mapping[SubsetId, Fraction]) -> List[List[Any]]:
    return [[subset_to_json(m), fraction_to_json(a)] for m, a in sorted(values.items())]


def contrast_from_json(n: int, rows: Any) -> Dict[SubsetId, Fraction]:
    return {subset_from_json(s, n): fraction_from_json(a) for s, a in rows}
