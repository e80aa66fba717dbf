"""Brute-force certification of a scheme table: the contrast condition (Hamming weights of OR'd
rows) and the security condition (equal restricted column multisets within each class of colour
assignments that agree below ``Q``).

Both checks work on the ``(2**|𝔖|, 2**n)`` array of profile counts, so the whole table is
processed with a handful of matrix products rather than per-pixel loops.
"""
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple, Union
from collections import Counter
from dataclasses import dataclass, field
from math import factorial
import logging

import numpy as np

from extvc.base import DomainError, VerificationError, _DCDict, dump_json, make_document
from extvc.contrast import Levels
from extvc.lattice import (
    SubsetFamily,
    SubsetId,
    cardinality,
    compress,
    format_subset,
    nonempty_subsets,
    subset_to_json,
)
from extvc.linsys import PixelProfile
from extvc.scheme import ColorAssignment, SchemeTable

__all__ = [
    "CERTIFICATE_FORMAT",
    "Witness",
    "ConditionCheck",
    "Certificate",
    "or_weight",
    "restrict_profile",
    "verify_contrast",
    "verify_security",
    "measure_levels",
    "certify",
    "profile_from_matrix",
    "import_collections",
]


logger = logging.getLogger(__name__)

CERTIFICATE_FORMAT = "extvc.certificate"
MAX_WITNESSES = 64


@dataclass(frozen=True)
class Witness(_DCDict):
    """One concrete failure.

    ``kind`` is ``"shape"`` (profile total differs from ``m`` or a count is negative), ``"level"``
    (an OR weight differs from the expected level), ``"contrast"`` (a member whose observed levels
    do not satisfy ``h > l``) or ``"restriction"`` (two assignments of one class disagree below
    ``subset``; ``reference`` is the class representative).
    """

    kind: str
    code: int
    subset: SubsetId
    expected: Any
    observed: Any
    reference: Optional[int] = None

    def to_json(self) -> Dict[str, Any]:
        return {
            "kind": self.kind,
            "code": self.code,
            "subset": subset_to_json(self.subset),
            "expected": self.expected,
            "observed": self.observed,
            "reference": self.reference,
        }


@dataclass
class ConditionCheck(_DCDict):
    condition: int
    passed: bool
    violations: int = 0
    witnesses: List[Witness] = field(default_factory=list)

    def add(self, witness: Witness, limit: int = MAX_WITNESSES) -> None:
        self.passed = False
        self.violations += 1
        if len(self.witnesses) < limit:
            self.witnesses.append(witness)

    def to_json(self) -> Dict[str, Any]:
        return {
            "passed": self.passed,
            "violations": self.violations,
            "witnesses": [w.to_json() for w in self.witnesses],
        }


@dataclass
class Certificate(_DCDict):
    """Outcome of both checks on one table, identified by its fingerprint. Failures are data: a
    failed certificate lists witnesses instead of raising."""

    fingerprint: str
    family: SubsetFamily
    m: int
    condition1: ConditionCheck
    condition2: ConditionCheck
    observed_levels: Dict[SubsetId, Tuple[int, int]] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.condition1.passed and self.condition2.passed

    def to_json(self) -> Dict[str, Any]:
        return make_document(
            CERTIFICATE_FORMAT,
            fingerprint=self.fingerprint,
            n=self.family.n,
            family=self.family.to_json(),
            m=self.m,
            passed=self.passed,
            condition1=self.condition1.to_json(),
            condition2=self.condition2.to_json(),
            observed_levels=[
                [subset_to_json(t), h, l] for t, (h, l) in sorted(self.observed_levels.items())
            ],
        )

    def save(self, path: str) -> str:
        return dump_json(self.to_json(), path)


def _counts(table: SchemeTable) -> np.ndarray:
    return np.array([p.counts for p in table.profiles], dtype=np.int64).reshape(
        len(table.profiles), 1 << table.n
    )


def _meets(n: int) -> np.ndarray:
    masks = np.arange(1 << n, dtype=np.int64)
    return ((masks[:, None] & masks[None, :]) != 0).astype(np.int64)


def _restriction(n: int, rows: SubsetId) -> np.ndarray:
    """0/1 matrix sending column support ``U`` to ``compress(U ∩ rows)``."""
    k = cardinality(rows)
    out = np.zeros((1 << n, 1 << k), dtype=np.int64)
    for u in range(1 << n):
        out[u, compress(u & rows, rows)] = 1
    return out


def _support(values: np.ndarray) -> List[List[Any]]:
    return [[int(u), int(c)] for u, c in enumerate(values) if c]


def or_weight(profile: PixelProfile, rows: SubsetId) -> int:
    """Black subpixels of the stacked ``rows``: ``Σ_{U ∩ rows ≠ ∅} counts[U]``."""
    if rows <= 0:
        raise DomainError("cannot stack an empty set of transparencies")
    return sum(c for u, c in enumerate(profile.counts) if u & rows)


def restrict_profile(profile: PixelProfile, rows: SubsetId) -> PixelProfile:
    """The profile of the basis matrix cut down to ``rows``, relabelled onto ``{1..|rows|}``. The
    total column count is preserved."""
    if rows <= 0:
        raise DomainError("cannot restrict to an empty set of transparencies")
    counts = [0] * (1 << cardinality(rows))
    for u, c in enumerate(profile.counts):
        counts[compress(u & rows, rows)] += c
    return PixelProfile(cardinality(rows), tuple(counts))


def _observed(
    family: SubsetFamily, weights: np.ndarray
) -> Dict[SubsetId, Tuple[int, int]]:
    """Most common OR weight per member over black, resp. white, assignments."""
    codes = np.arange(weights.shape[0])
    observed = {}
    for j, t in enumerate(family.ordered):
        black = (codes >> j) & 1 == 1
        levels = []
        for mask in (black, ~black):
            values, counts = np.unique(weights[mask, t], return_counts=True)
            levels.append(int(values[np.argmax(counts)]))
        observed[t] = (levels[0], levels[1])
    return observed


def verify_contrast(
    table: SchemeTable, max_witnesses: int = MAX_WITNESSES
) -> Tuple[ConditionCheck, Dict[SubsetId, Tuple[int, int]]]:
    """Contrast condition: every profile is a non-negative multiset of ``m`` columns, and for every
    assignment ``𝔗`` and member ``T`` the OR weight of rows ``T`` is ``h_T`` if ``T ∈ 𝔗`` and
    ``l_T`` otherwise, with ``h_T > l_T``.

    Returns:
        Tuple[ConditionCheck, Dict[SubsetId, Tuple[int, int]]]: The check and the levels observed
        for each member (most common value per colour).
    """
    family = table.family
    check = ConditionCheck(condition=1, passed=True)
    counts = _counts(table)
    for code, row in enumerate(counts):
        total = int(row.sum())
        if total != table.m:
            check.add(Witness("shape", code, 0, table.m, total), max_witnesses)
        for u in np.flatnonzero(row < 0):
            check.add(Witness("shape", code, int(u), 0, int(row[u])), max_witnesses)
    weights = counts @ _meets(table.n)
    for j, t in enumerate(family.ordered):
        h, l = table.levels[t]  # noqa: E741
        for code in family.assignments():
            expected = h if code >> j & 1 else l
            observed = int(weights[code, t])
            if observed != expected:
                check.add(Witness("level", code, t, expected, observed), max_witnesses)
    observed_levels = _observed(family, weights)
    for t, (h, l) in observed_levels.items():  # noqa: E741
        if h <= l:
            check.add(Witness("contrast", 0, t, "h > l", [h, l]), max_witnesses)
    return check, observed_levels


def verify_security(table: SchemeTable, max_witnesses: int = MAX_WITNESSES) -> ConditionCheck:
    """Security condition: for every nonempty ``Q``, assignments agreeing on ``𝔗 ∩ P(Q)`` have equal
    profiles once restricted to the rows of ``Q``.

    Assignments are grouped by ``code & within_mask(Q)``, whose value is itself a member of the
    class and serves as its representative, so the cost is linear in the number of assignments.
    """
    family = table.family
    check = ConditionCheck(condition=2, passed=True)
    counts = _counts(table)
    codes = np.arange(counts.shape[0])
    for q in nonempty_subsets(table.n):
        restricted = counts @ _restriction(table.n, q)
        reps = codes & family.within_mask(q)
        differs = np.any(restricted != restricted[reps], axis=1)
        for code in np.flatnonzero(differs):
            rep = int(reps[code])
            check.add(
                Witness(
                    "restriction",
                    int(code),
                    q,
                    _support(restricted[rep]),
                    _support(restricted[code]),
                    reference=rep,
                ),
                max_witnesses,
            )
    return check


def certify(
    table: SchemeTable, max_witnesses: int = MAX_WITNESSES
) -> Tuple[SchemeTable, Certificate]:
    """Runs both conditions.

    Returns:
        Tuple[SchemeTable, Certificate]: The table with ``verified`` set to the verdict, and the
        certificate.
    """
    condition1, observed = verify_contrast(table, max_witnesses)
    condition2 = verify_security(table, max_witnesses)
    cert = Certificate(
        fingerprint=table.fingerprint,
        family=table.family,
        m=table.m,
        condition1=condition1,
        condition2=condition2,
        observed_levels=observed,
    )
    logger.debug(
        "certified %s: contrast %s (%d), security %s (%d)",
        cert.fingerprint[:12],
        condition1.passed,
        condition1.violations,
        condition2.passed,
        condition2.violations,
    )
    return table.with_verified(cert.passed), cert


def measure_levels(table: SchemeTable) -> Dict[SubsetId, Tuple[int, int]]:
    """The ``(h_T, l_T)`` realized by the table for every member.

    Raises:
        VerificationError: if the contrast condition does not hold.
    """
    check, observed = verify_contrast(table)
    if not check.passed:
        first = check.witnesses[0]
        raise VerificationError(
            f"contrast condition fails ({check.violations} violations), first at "
            f"{format_subset(first.subset)} under assignment "
            f"{ColorAssignment(table.family, first.code)}"
        )
    return observed


def profile_from_matrix(matrix: Any) -> PixelProfile:
    """Column-support counts of an explicit ``n x m`` Boolean matrix."""
    rows = np.asarray(matrix, dtype=bool)
    if rows.ndim != 2 or rows.shape[0] < 1:
        raise DomainError(f"expecting an n x m Boolean matrix, got shape {rows.shape}")
    n = rows.shape[0]
    weights = np.left_shift(1, np.arange(n, dtype=np.int64))
    supports = weights @ rows.astype(np.int64)
    return PixelProfile(n, tuple(np.bincount(supports, minlength=1 << n).tolist()))


def _class_size(profile: PixelProfile) -> int:
    size = factorial(profile.m)
    for c in profile.counts:
        size //= factorial(c)
    return size


def _profile_of_collection(code: int, matrices: Sequence[Any]) -> PixelProfile:
    if not len(matrices):
        raise VerificationError(f"assignment {code} has an empty collection")
    profiles = [profile_from_matrix(m) for m in matrices]
    profile = profiles[0]
    if len(profiles) == 1:
        return profile
    if any(p != profile for p in profiles[1:]):
        raise VerificationError(
            f"collection of assignment {code} mixes several column multisets, which is not "
            "supported"
        )
    multiplicity = Counter(np.asarray(m, dtype=bool).tobytes() for m in matrices)
    if len(multiplicity) != _class_size(profile) or len(set(multiplicity.values())) != 1:
        raise VerificationError(
            f"collection of assignment {code} is not a uniform column-permutation class"
        )
    return profile


def import_collections(
    family: SubsetFamily,
    collections: Mapping[Union[int, ColorAssignment], Sequence[Any]],
    levels: Optional[Levels] = None,
) -> SchemeTable:
    """Turns explicit matrix collections, one per colour assignment, into a table.

    A collection is either a single base matrix or the complete, uniformly repeated set of its
    column permutations. Anything else is rejected rather than verified under the wrong model.
    Without ``levels``, members take their most common observed weights and other subsets span
    the observed range ``(max, min)``.

    Raises:
        VerificationError: on unsupported collections or inconsistent shapes.
    """
    n = family.n
    profiles: List[Optional[PixelProfile]] = [None] * (1 << len(family))
    for key, matrices in collections.items():
        code = key.code if isinstance(key, ColorAssignment) else int(key)
        if not 0 <= code < len(profiles):
            raise VerificationError(f"assignment code {code} out of range")
        profile = _profile_of_collection(code, matrices)
        if profile.n != n:
            raise VerificationError(f"assignment {code} has {profile.n} rows, expecting {n}")
        profiles[code] = profile
    missing = [code for code, p in enumerate(profiles) if p is None]
    if missing:
        raise VerificationError(f"no collection for assignments {missing}")
    complete = [p for p in profiles if p is not None]
    widths = {p.m for p in complete}
    if len(widths) != 1:
        raise VerificationError(f"collections disagree on the pixel expansion: {sorted(widths)}")
    if levels is None:
        weights = np.array([p.counts for p in complete], dtype=np.int64) @ _meets(n)
        observed = _observed(family, weights)
        h = [0] * (1 << n)
        l = [0] * (1 << n)  # noqa: E741
        for t in range(1, 1 << n):
            h[t], l[t] = observed.get(t, (int(weights[:, t].max()), int(weights[:, t].min())))
        levels = Levels(n, tuple(h), tuple(l))
    return SchemeTable(
        family=family,
        m=widths.pop(),
        levels=levels,
        profiles=tuple(complete),
        provenance={"construction": "imported"},
    )
