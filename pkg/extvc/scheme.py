"""Colour assignments and scheme tables, plus their versioned JSON document."""
from typing import Any, Dict, Iterator, List, Mapping, Optional, Sequence, Tuple
from dataclasses import dataclass, field, replace

from extvc.base import (
    DomainError,
    canonical_json,
    check_document,
    dump_json,
    fingerprint_bytes,
    load_json,
    make_document,
)
from extvc.contrast import Levels
from extvc.lattice import (
    SubsetFamily,
    SubsetId,
    check_n,
    format_subset,
    subset_from_json,
    subset_to_json,
)
from extvc.linsys import PixelProfile

__all__ = ["ColorAssignment", "SchemeTable", "TABLE_FORMAT"]


TABLE_FORMAT = "extvc.scheme-table"


@dataclass(frozen=True)
class ColorAssignment:
    """The members of ``family`` whose image is black at the current pixel, as a code over the
    family's canonical member order."""

    family: SubsetFamily
    code: int

    def __post_init__(self) -> None:
        if not 0 <= self.code < 1 << len(self.family):
            raise DomainError(f"assignment code {self.code} out of range")

    @classmethod
    def of(cls, family: SubsetFamily, blacks: Sequence[SubsetId]) -> "ColorAssignment":
        return cls(family, family.encode(blacks))

    @property
    def n(self) -> int:
        return self.family.n

    @property
    def blacks(self) -> List[SubsetId]:
        return self.family.blacks(self.code)

    def is_black(self, mask: SubsetId) -> bool:
        return mask in self.blacks

    def restricted(self, q: SubsetId) -> int:
        """Code of ``𝔗 ∩ P(q)``."""
        return self.code & self.family.within_mask(q)

    def __str__(self) -> str:
        return "{" + ", ".join(format_subset(m) for m in self.blacks) + "}"


@dataclass(frozen=True)
class SchemeTable:
    """A complete scheme: one profile per colour assignment (indexed by code), the levels it is
    meant to realize, its expansion ``m`` and where it came from.

    Construction only checks shapes; whether the table really is a scheme is for
    :mod:`extvc.verifier` to decide, and ``verified`` records that it did.
    """

    family: SubsetFamily
    m: int
    levels: Levels
    profiles: Tuple[PixelProfile, ...]
    provenance: Dict[str, Any] = field(default_factory=dict, compare=False, hash=False)
    verified: bool = field(default=False, compare=False)

    def __post_init__(self) -> None:
        profiles = tuple(self.profiles)
        if len(profiles) != 1 << len(self.family):
            raise DomainError(
                f"expecting {1 << len(self.family)} profiles, got {len(profiles)}"
            )
        if self.levels.n != self.n or any(p.n != self.n for p in profiles):
            raise DomainError("profiles and levels must share the family's ground set")
        if self.m < 0:
            raise DomainError("pixel expansion cannot be negative")
        object.__setattr__(self, "profiles", profiles)

    @property
    def n(self) -> int:
        return self.family.n

    def profile(self, assignment: Any) -> PixelProfile:
        code = assignment.code if isinstance(assignment, ColorAssignment) else int(assignment)
        return self.profiles[code]

    def assignments(self) -> Iterator[ColorAssignment]:
        for code in self.family.assignments():
            yield ColorAssignment(self.family, code)

    def items(self) -> Iterator[Tuple[ColorAssignment, PixelProfile]]:
        for assignment in self.assignments():
            yield assignment, self.profiles[assignment.code]

    @property
    def uniform(self) -> bool:
        return all(p.m == self.m for p in self.profiles)

    @property
    def nonnegative(self) -> bool:
        return all(p.nonnegative for p in self.profiles)

    def with_verified(self, verified: bool = True) -> "SchemeTable":
        return replace(self, verified=verified)

    def with_provenance(self, **info: Any) -> "SchemeTable":
        provenance = dict(self.provenance)
        provenance.update(info)
        return replace(self, provenance=provenance)

    def _content(self) -> Dict[str, Any]:
        return {
            "n": self.n,
            "family": self.family.to_json(),
            "m": self.m,
            "levels": self.levels.to_json(),
            "profiles": [
                {
                    "code": a.code,
                    "blacks": [subset_to_json(b) for b in a.blacks],
                    "columns": [[subset_to_json(u), c] for u, c in p.support()],
                }
                for a, p in self.items()
            ],
        }

    @property
    def fingerprint(self) -> str:
        """SHA-256 over the canonical JSON of the table content (provenance and the verification
        flag excluded)."""
        return fingerprint_bytes(canonical_json(self._content()))

    def to_json(self) -> Dict[str, Any]:
        return make_document(
            TABLE_FORMAT,
            **self._content(),
            provenance=self.provenance,
            verified=self.verified,
            fingerprint=self.fingerprint,
        )

    @classmethod
    def from_json(cls, doc: Mapping[str, Any]) -> "SchemeTable":
        """Reads a table document. ``verified`` is kept only while the stored fingerprint matches
        the content; the fingerprint is an unkeyed integrity check against accidental edits, not
        an authentication, so consumers that rely on the flag re-certify (see
        :func:`extvc.codec.shares.encode`)."""
        doc = check_document(doc, TABLE_FORMAT)
        try:
            n = check_n(doc["n"])
            family = SubsetFamily.from_json(n, doc["family"])
            levels = Levels.from_json(n, doc["levels"])
            profiles: List[Optional[PixelProfile]] = [None] * (1 << len(family))
            for entry in doc["profiles"]:
                code = int(entry["code"])
                if "blacks" in entry and family.encode(
                    subset_from_json(b, n) for b in entry["blacks"]
                ) != code:
                    raise DomainError(f"profile {code} lists inconsistent black images")
                counts = {subset_from_json(u, n): int(c) for u, c in entry["columns"]}
                profiles[code] = PixelProfile.from_map(n, counts)
            if any(p is None for p in profiles):
                raise DomainError("some colour assignments have no profile")
            table = cls(
                family=family,
                m=int(doc["m"]),
                levels=levels,
                profiles=tuple(p for p in profiles if p is not None),
                provenance=dict(doc.get("provenance") or {}),
                verified=bool(doc.get("verified", False)),
            )
        except (KeyError, TypeError, IndexError) as e:
            raise DomainError(f"malformed scheme table: {e!r}") from e
        if doc.get("fingerprint") not in (None, table.fingerprint):
            # edited by hand since it was certified
            table = table.with_verified(False)
        return table

    def save(self, path: str) -> str:
        return dump_json(self.to_json(), path)

    @classmethod
    def load(cls, path: str) -> "SchemeTable":
        return cls.from_json(load_json(path))
