"""Exceptions, result containers and serialization helpers shared across extvc."""
from typing import Any, Dict, ItemsView, KeysView, Optional, Sequence, Union
from dataclasses import asdict
from fractions import Fraction
import hashlib
import json
import os
import tempfile

__all__ = [
    "FORMAT_VERSION",
    "ExtVCError",
    "DomainError",
    "InfeasibleError",
    "PreconditionError",
    "NotApplicableError",
    "VerificationError",
    "SchemeViolation",
    "TractabilityError",
    "fraction_to_json",
    "fraction_from_json",
    "make_document",
    "check_document",
    "canonical_json",
    "fingerprint_bytes",
    "fingerprint_file",
    "atomic_write",
    "dump_json",
    "load_json",
]


FORMAT_VERSION = 1


class ExtVCError(Exception):
    """Root of all extvc errors. ``exit_code`` is what the CLI exits with."""

    exit_code: int = 1


class DomainError(ExtVCError, ValueError):
    """Argument outside of the supported domain (sizes, subsets, malformed documents)."""


class InfeasibleError(ExtVCError):
    """No scheme exists for the requested levels, or a profile would need negative columns.

    Args:
        message (str): Human readable explanation.
        violations (Sequence[int]): Offending subsets (bitmasks).
        assignment (Optional[int]): Colour assignment code where the failure occurred, if any.
    """

    exit_code = 2

    def __init__(
        self, message: str, violations: Sequence[int] = (), assignment: Optional[int] = None
    ) -> None:
        super().__init__(message)
        self.violations = list(violations)
        self.assignment = assignment


class PreconditionError(ExtVCError, ValueError):
    """A construction's hypothesis does not hold; ``clause`` names the failing one."""

    exit_code = 2

    def __init__(self, message: str, clause: str) -> None:
        super().__init__(message)
        self.clause = clause


class NotApplicableError(ExtVCError):
    exit_code = 2


class VerificationError(ExtVCError):
    exit_code = 3


class SchemeViolation(VerificationError):
    """Observed black counts disagree within one colour class."""

    def __init__(self, message: str, report: Dict[str, Any]) -> None:
        super().__init__(message)
        self.report = report


class TractabilityError(ExtVCError):
    """Refusal to search beyond the configured gate; ``required`` tells what would be needed."""

    exit_code = 4

    def __init__(self, message: str, required: Dict[str, Any]) -> None:
        super().__init__(message)
        self.required = required


class _DCDict:
    def __iter__(self) -> Any:
        return iter(asdict(self).items())  # type: ignore

    def __getitem__(self, item: str) -> Any:
        return getattr(self, item)

    def keys(self) -> KeysView:
        return asdict(self).keys()  # type: ignore

    def items(self) -> ItemsView:
        return asdict(self).items()  # type: ignore


def fraction_to_json(value: Union[Fraction, int]) -> str:
    value = Fraction(value)
    return f"{value.numerator}/{value.denominator}"


def fraction_from_json(value: Union[str, int]) -> Fraction:
    try:
        return Fraction(value)
    except (ValueError, ZeroDivisionError) as e:
        raise DomainError(f"invalid rational {value!r}") from e


def make_document(kind: str, **payload: Any) -> Dict[str, Any]:
    """Wraps a payload into a versioned document, ``{"format": kind, "version": 1, ...}``."""
    doc: Dict[str, Any] = {"format": kind, "version": FORMAT_VERSION}
    doc.update(payload)
    return doc


def check_document(doc: Any, kind: str) -> Dict[str, Any]:
    if not isinstance(doc, dict):
        raise DomainError(f"expecting a JSON object for '{kind}'")
    if doc.get("format") != kind:
        raise DomainError(f"expecting a '{kind}' document, got {doc.get('format')!r}")
    if doc.get("version") != FORMAT_VERSION:
        raise DomainError(f"unsupported '{kind}' version {doc.get('version')!r}")
    return doc


def canonical_json(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=True)


def fingerprint_bytes(data: Union[bytes, str]) -> str:
    if isinstance(data, str):
        data = data.encode("utf-8")
    return hashlib.sha256(data).hexdigest()


def fingerprint_file(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fp:
        for chunk in iter(lambda: fp.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def atomic_write(path: str, data: Union[bytes, str]) -> None:
    """Writes ``data`` to a temporary sibling of ``path`` and renames it into place, so readers
    never observe a partially written file."""
    if isinstance(data, str):
        data = data.encode("utf-8")
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "wb") as fp:
            fp.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dump_json(obj: Any, path: Optional[str] = None) -> str:
    text = json.dumps(obj, indent=2, sort_keys=False) + "\n"
    if path:
        atomic_write(path, text)
    return text


def load_json(path: str) -> Any:
    try:
        with open(path, "r", encoding="utf-8") as fp:
            return json.load(fp)
    except json.JSONDecodeError as e:
        raise DomainError(f"malformed JSON in '{path}': {e}") from e
