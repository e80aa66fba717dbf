"""Scheme constructions: the straightforward block construction, the general builder driven by a
level map, the improved construction around an even subset, and a few table transformations."""
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple
from fractions import Fraction
import logging
import warnings

import numpy as np

from extvc.base import DomainError, InfeasibleError, NotApplicableError
from extvc.contrast import (
    DeltaSpec,
    Levels,
    Rational,
    droste_expansion,
    existence_check,
    realize_contrast,
    relief_subsets,
    theorem7_candidates,
    theorem7_levels,
    tight_levels,
)
from extvc.lattice import (
    SubsetFamily,
    SubsetId,
    cardinality,
    compress,
    expand,
    format_subset,
    elements,
    full_set,
    is_subset,
    nonempty_subsets,
    permute,
    subsets_of,
)
from extvc.linsys import PixelProfile, RVector, solve_x
from extvc.scheme import ColorAssignment, SchemeTable

__all__ = [
    "kk_threshold_profiles",
    "droste_scheme",
    "canonical_r",
    "build_scheme",
    "improved_scheme",
    "table_from_r",
    "pad_black",
    "realized_scheme",
    "basis_matrix",
    "relabel",
    "lift_table",
]


logger = logging.getLogger(__name__)


def kk_threshold_profiles(k: int) -> Tuple[PixelProfile, PixelProfile]:
    """Profiles of the ``(k, k)`` threshold scheme on ``{1..k}``: white uses one column per
    even-sized subset, black one per odd-sized subset, ``2**(k-1)`` columns each.

    Returns:
        Tuple[PixelProfile, PixelProfile]: ``(white, black)``.
    """
    if k < 1:
        raise DomainError(f"threshold size must be positive, got {k}")
    white = [0] * (1 << k)
    black = [0] * (1 << k)
    for u in range(1 << k):
        if cardinality(u) % 2:
            black[u] = 1
        else:
            white[u] = 1
    return PixelProfile(k, tuple(white)), PixelProfile(k, tuple(black))


def _add_blocks(
    counts: List[int], family: SubsetFamily, code: int, members: Sequence[SubsetId]
) -> None:
    """Adds the ``(|T|, |T|)`` block of every ``T`` in ``members`` under assignment ``code``,
    black on the rows outside ``T``."""
    full = full_set(family.n)
    positions = family.positions
    for t in members:
        parity = code >> positions[t] & 1
        outside = full ^ t
        for u in subsets_of(t):
            if cardinality(u) % 2 == parity:
                counts[u | outside] += 1


def droste_scheme(family: SubsetFamily) -> SchemeTable:
    """One ``(|T|, |T|)`` block per member ``T``, its columns black on every row outside ``T``.
    Expansion ``Σ_{T ∈ 𝔖} 2^(|T|-1)``; the levels are the tight levels of unit deltas."""
    if not len(family):
        raise DomainError("cannot build a scheme for an empty family")
    n = family.n
    profiles = []
    for assignment in family.assignments():
        counts = [0] * (1 << n)
        _add_blocks(counts, family, assignment, family.ordered)
        profiles.append(PixelProfile(n, tuple(counts)))
    return SchemeTable(
        family=family,
        m=droste_expansion(family),
        levels=tight_levels(DeltaSpec.for_family(family)),
        profiles=tuple(profiles),
        provenance={"construction": "droste", "padding": "none"},
    )


def canonical_r(assignment: ColorAssignment, levels: Levels) -> RVector:
    """Stacked black counts realizing ``levels`` under ``assignment``.

    Members take ``h`` when black and ``l`` when white. A subset ``T`` outside the family takes its
    single value when ``h_T == l_T``; otherwise it takes ``min(h_T, l_T)`` exactly when every
    nonempty proper subset ``S`` of ``T`` sits at ``h_S`` for even ``|S|`` and ``l_S`` for odd
    ``|S|``, and ``max(h_T, l_T)`` elsewhere. Subsets are processed in canonical order, so
    ``r_T`` depends on ``𝔗 ∩ P(T)`` only.
    """
    family = assignment.family
    if levels.n != family.n:
        raise DomainError("levels and family live on different ground sets")
    blacks = set(assignment.blacks)
    r = [0] * (1 << family.n)
    for t in nonempty_subsets(family.n):
        h, l = levels[t]  # noqa: E741
        if t in family:
            r[t] = h if t in blacks else l
        elif h == l:
            r[t] = h
        else:
            corner = all(
                r[s] == (levels.h[s] if cardinality(s) % 2 == 0 else levels.l[s])
                for s in subsets_of(t)[1:-1]
            )
            r[t] = min(h, l) if corner else max(h, l)
    return RVector(family.n, tuple(r))


def _project(family: SubsetFamily, levels: Levels) -> Tuple[SubsetFamily, Levels]:
    support = family.union
    k = cardinality(support)
    sub_family = SubsetFamily(k, frozenset(compress(m, support) for m in family.members))
    h = [0] * (1 << k)
    l = [0] * (1 << k)  # noqa: E741
    for s in range(1, 1 << k):
        h[s], l[s] = levels[expand(s, support)]
    return sub_family, Levels(k, tuple(h), tuple(l))


def lift_table(table: SchemeTable, family: SubsetFamily) -> SchemeTable:
    """Embeds a table built on ``∪𝔖`` back into ``{1..n}``, with all-white rows outside."""
    n = family.n
    support = family.union
    h = [0] * (1 << n)
    l = [0] * (1 << n)  # noqa: E741
    for t in range(1, 1 << n):
        inner = t & support
        if inner:
            h[t], l[t] = table.levels[compress(inner, support)]
    profiles = []
    for profile in table.profiles:
        counts = [0] * (1 << n)
        for u, c in enumerate(profile.counts):
            counts[expand(u, support)] += c
        profiles.append(PixelProfile(n, tuple(counts)))
    provenance = dict(table.provenance)
    provenance["projected"] = {"support": elements(support)}
    return SchemeTable(
        family=family,
        m=table.m,
        levels=Levels(n, tuple(h), tuple(l)),
        profiles=tuple(profiles),
        provenance=provenance,
    )


def table_from_r(
    family: SubsetFamily,
    levels: Levels,
    rvectors: Sequence[RVector],
    m: Optional[int] = None,
    provenance: Optional[Dict[str, Any]] = None,
) -> SchemeTable:
    """Solves every assignment's r-vector and pads with all-white columns up to ``m`` (the largest
    full-stack count when omitted).

    Raises:
        InfeasibleError: if some profile needs a negative column count.
    """
    profiles = []
    for code, r in enumerate(rvectors):
        x = solve_x(r)
        if not x.nonnegative:
            negative = [u for u, c in enumerate(x.counts) if c < 0]
            raise InfeasibleError(
                f"negative profile under assignment {ColorAssignment(family, code)} at "
                + ", ".join(format_subset(u) for u in negative),
                violations=negative,
                assignment=code,
            )
        profiles.append(x)
    width = max(p.m for p in profiles)
    if m is None:
        m = width
    elif m < width:
        raise InfeasibleError(f"profiles need {width} columns, only {m} allowed")
    return SchemeTable(
        family=family,
        m=m,
        levels=levels,
        profiles=tuple(p.padded(white=m - p.m) for p in profiles),
        provenance=dict(provenance or {}, padding="white"),
    )


def build_scheme(
    family: SubsetFamily, levels: Levels, provenance: Optional[Dict[str, Any]] = None
) -> SchemeTable:
    """Builds the table whose profiles solve ``M x = r`` for ``r = canonical_r(𝔗, levels)``, padded
    with all-white columns to a common expansion.

    A family confined to a proper subset of the ground set is built on its union and lifted back,
    transparencies outside staying white.

    Args:
        family (SubsetFamily): Members with their own image.
        levels (Levels): Full level map, must pass :func:`extvc.contrast.existence_check`.
        provenance (Optional[Dict[str, Any]]): Recorded in the table.

    Raises:
        InfeasibleError: on an existence violation or a negative profile.
    """
    if not len(family):
        raise DomainError("cannot build a scheme for an empty family")
    if levels.n != family.n:
        raise DomainError("levels and family live on different ground sets")
    provenance = dict(provenance or {"construction": "tight"})
    if family.union != family.top:
        sub_family, sub_levels = _project(family, levels)
        return lift_table(build_scheme(sub_family, sub_levels, provenance), family)
    violations = existence_check(levels)
    if violations:
        raise InfeasibleError(
            "levels violate the existence inequality at "
            + ", ".join(format_subset(s) for s in violations),
            violations=violations,
        )
    rvectors = [
        canonical_r(ColorAssignment(family, code), levels) for code in family.assignments()
    ]
    table = table_from_r(family, levels, rvectors, provenance=provenance)
    logger.debug("built %s scheme with m=%d", provenance.get("construction"), table.m)
    return table


def _relieved_scheme(family: SubsetFamily, relief: SubsetId) -> SchemeTable:
    """Scheme for a family covering its ground set but missing the full stack, at the tight levels
    lowered by one. The stack of ``relief`` drops by one more whenever the members inside it have
    their even-sized images black and their odd-sized ones white."""
    n = family.n
    tight = tight_levels(DeltaSpec.for_family(family))
    h = [0] + [v - 1 for v in tight.h[1:]]
    l = [0] + [v - 1 for v in tight.l[1:]]  # noqa: E741
    positions = family.positions
    within = family.within_mask(relief)
    corner = family.encode(m for m in family.restrict(relief).members if cardinality(m) % 2 == 0)
    rvectors = []
    for code in family.assignments():
        r = [h[t] if t in positions and code >> positions[t] & 1 else l[t] for t in range(1 << n)]
        if code & within == corner:
            r[relief] -= 1
        rvectors.append(RVector(n, tuple(r)))
    h[relief] -= 1
    return table_from_r(family, Levels(n, tuple(h), tuple(l)), rvectors)


def _improved_around(family: SubsetFamily, t_even: SubsetId, relief: SubsetId) -> SchemeTable:
    n = family.n
    inner_family = SubsetFamily(
        cardinality(t_even), frozenset(compress(m, t_even) for m in family.restrict(t_even).members)
    )
    inner = _relieved_scheme(inner_family, compress(relief, t_even))
    outside = full_set(n) ^ t_even
    outer = [m for m in family.ordered if not is_subset(m, t_even)]
    profiles = []
    for code in family.assignments():
        inner_code = inner_family.encode(
            compress(b, t_even) for b in family.blacks(code) if is_subset(b, t_even)
        )
        counts = [0] * (1 << n)
        for u, c in enumerate(inner.profiles[inner_code].counts):
            counts[expand(u, t_even) | outside] += c
        _add_blocks(counts, family, code, outer)
        profiles.append(PixelProfile(n, tuple(counts)))
    return SchemeTable(
        family=family,
        m=inner.m + droste_expansion(SubsetFamily(n, frozenset(outer))),
        levels=theorem7_levels(family, t_even, relief),
        profiles=tuple(profiles),
        provenance={
            "construction": "improved",
            "t": elements(t_even),
            "relief": elements(relief),
            "padding": "white",
        },
    )


def improved_scheme(family: SubsetFamily, t_even: Optional[SubsetId] = None) -> SchemeTable:
    """Builds the improved construction around ``t_even``, or around the smallest qualifying even
    subset ``t ∉ 𝔖`` when omitted.

    An inner scheme on the rows of ``t`` for ``𝔖 ∩ P(t)``, one column narrower than its
    straightforward counterpart, is joined with the ``(|T|, |T|)`` blocks of the members outside
    ``P(t)``; the inner columns are black on every row outside ``t``. The first candidate with a
    relief subset (see :func:`extvc.contrast.relief_subsets`) is used.

    Raises:
        NotApplicableError: when no even subset qualifies.
        PreconditionError: when ``t_even`` does not qualify.
        InfeasibleError: when candidates qualify but none has a relief subset, so their adjusted
            levels cannot be realized.
    """
    if t_even is None:
        candidates = theorem7_candidates(family)
    else:
        theorem7_levels(family, t_even)
        candidates = [t_even]
    if not candidates:
        raise NotApplicableError(
            f"no even subset outside {family} supports the improved construction"
        )
    for t in candidates:
        reliefs = relief_subsets(family, t)
        if reliefs:
            table = _improved_around(family, t, reliefs[0])
            logger.debug(
                "improved scheme around %s (relief %s) with m=%d",
                format_subset(t),
                format_subset(reliefs[0]),
                table.m,
            )
            return table
        logger.info("adjusted levels around %s have no realization", format_subset(t))
    raise InfeasibleError(
        "no candidate of the improved construction has an even subset whose odd subsets all lie "
        "in members: " + ", ".join(format_subset(t) for t in candidates),
        violations=candidates,
    )


def pad_black(table: SchemeTable, k: int) -> SchemeTable:
    """Adds ``k`` always-black columns to every profile; every level grows by ``k``."""
    if k < 0:
        raise DomainError("cannot remove columns")
    if k == 0:
        return table
    return SchemeTable(
        family=table.family,
        m=table.m + k,
        levels=table.levels.shifted(k),
        profiles=tuple(p.padded(black=k) for p in table.profiles),
        provenance=dict(
            table.provenance, black_padding=table.provenance.get("black_padding", 0) + k
        ),
    )


def realized_scheme(
    alphas_target: Mapping[SubsetId, Rational], epsilon: Rational, n: Optional[int] = None
) -> SchemeTable:
    """Scheme whose contrasts are within ``epsilon`` below the targets: tight scheme for the
    realized deltas, diluted with always-black columns up to the realized expansion."""
    delta, expansion = realize_contrast(alphas_target, epsilon, n)
    family = delta.family
    dropped = [t for t, a in alphas_target.items() if Fraction(a) > 0 and delta[t] == 0]
    if dropped:
        warnings.warn(
            "contrast targets rounded to zero: " + ", ".join(format_subset(t) for t in dropped),
            UserWarning,
        )
    table = build_scheme(family, tight_levels(delta), provenance={"construction": "realized"})
    return pad_black(table, expansion - table.m)


def basis_matrix(profile: PixelProfile) -> np.ndarray:
    """Explicit ``n x m`` Boolean matrix of a profile (non-negative counts only), columns grouped by
    support in canonical order with the all-white ones first."""
    if not profile.nonnegative:
        raise DomainError("a profile with negative counts has no basis matrix")
    supports = np.repeat(np.arange(1 << profile.n, dtype=np.int64), profile.as_array())
    rows = np.arange(profile.n, dtype=np.int64)[:, None]
    return ((supports[None, :] >> rows) & 1).astype(bool)


def relabel(table: SchemeTable, perm: Sequence[int]) -> SchemeTable:
    """The same table with transparency ``i`` renamed ``perm[i-1]``."""
    family = table.family.permuted(perm)
    n = table.n
    h = [0] * (1 << n)
    l = [0] * (1 << n)  # noqa: E741
    for t in range(1, 1 << n):
        h[permute(t, perm)], l[permute(t, perm)] = table.levels[t]
    profiles: List[Optional[PixelProfile]] = [None] * len(table.profiles)
    for assignment, profile in table.items():
        code = family.encode(permute(b, perm) for b in assignment.blacks)
        counts = [0] * (1 << n)
        for u, c in enumerate(profile.counts):
            counts[permute(u, perm)] = c
        profiles[code] = PixelProfile(n, tuple(counts))
    return SchemeTable(
        family=family,
        m=table.m,
        levels=Levels(n, tuple(h), tuple(l)),
        profiles=tuple(p for p in profiles if p is not None),
        provenance=dict(table.provenance, relabelled=list(perm)),
    )
