"""Sub-commands of the CLI, one hydra node per command, plus the run manifest they emit."""
from typing import Any, ClassVar, Dict, List, Optional, Sequence
from dataclasses import asdict, dataclass, field
from abc import ABC, abstractmethod
from fractions import Fraction
import json
import logging
import os
import platform
import warnings

import hydra
import numpy as np
from omegaconf import MISSING

from extvc.base import (
    DomainError,
    ExtVCError,
    InfeasibleError,
    NotApplicableError,
    VerificationError,
    _DCDict,
    atomic_write,
    dump_json,
    fingerprint_file,
    load_json,
    make_document,
)
from extvc.builder import build_scheme, droste_scheme, improved_scheme, realized_scheme
from extvc.cli.readers import ImageCodec
from extvc.codec import Layout, ShareSet, encode, measure, stack
from extvc.contrast import DeltaSpec, Levels, contrast_from_json, tight_levels
from extvc.lattice import (
    SubsetFamily,
    SubsetId,
    elements,
    format_subset,
    from_elements,
    subset_from_json,
)
from extvc.report import TableReport
from extvc.scheduling import Scheduler
from extvc.scheme import SchemeTable
from extvc.search import SearchBudget, conjecture_scan, droste_gap, min_expansion
from extvc.verifier import certify, import_collections

__all__ = [
    "MANIFEST_FORMAT",
    "RunManifest",
    "RunContext",
    "Command",
    "CommandBuild",
    "CommandVerify",
    "CommandEncode",
    "CommandStack",
    "CommandMeasure",
    "CommandSearch",
    "CommandGap",
    "CommandConjecture",
    "CommandReport",
    "parse_family",
    "parse_subset",
    "parse_delta",
    "manifest_path",
    "error_document",
]


logger = logging.getLogger(__name__)

MANIFEST_FORMAT = "extvc.run-manifest"


def _versions() -> Dict[str, str]:
    from extvc import __version__

    return {
        "extvc": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
    }


def manifest_path(artifact: str) -> str:
    """``out/table.json`` -> ``out/table.manifest.json``; a directory gets a sibling file."""
    root, _ = os.path.splitext(artifact.rstrip(os.sep))
    return f"{root}.manifest.json"


@dataclass
class RunManifest(_DCDict):
    """What a command consumed and produced, by SHA-256, with its arguments and seed."""

    command: str
    arguments: Dict[str, Any]
    inputs: Dict[str, str]
    outputs: Dict[str, str]
    versions: Dict[str, str]
    seed: Optional[int] = None

    @classmethod
    def collect(
        cls,
        command: str,
        arguments: Dict[str, Any],
        inputs: Sequence[str],
        outputs: Sequence[str],
        seed: Optional[int] = None,
    ) -> "RunManifest":
        return cls(
            command=command,
            arguments=arguments,
            inputs={path: fingerprint_file(path) for path in inputs},
            outputs={path: fingerprint_file(path) for path in outputs},
            versions=_versions(),
            seed=seed,
        )

    def to_json(self) -> Dict[str, Any]:
        return make_document(MANIFEST_FORMAT, **asdict(self))

    def save(self, path: str) -> str:
        dump_json(self.to_json(), path)
        logger.info("manifest written to %s", path)
        return path


def error_document(error: ExtVCError) -> Dict[str, Any]:
    details = {
        key: getattr(error, key)
        for key in ("violations", "assignment", "clause", "required", "report")
        if getattr(error, key, None) is not None
    }
    if "violations" in details:
        details["violations"] = [elements(t) for t in details["violations"]]
    return make_document(
        "extvc.error",
        error=type(error).__name__,
        message=str(error),
        exit_code=error.exit_code,
        **details,
    )


def _loads(value: Any, what: str) -> Any:
    if not isinstance(value, str):
        return value
    try:
        return json.loads(value)
    except json.JSONDecodeError as e:
        raise DomainError(f"{what} must be JSON, got {value!r}") from e


def parse_family(value: Any, n: Optional[int] = None) -> SubsetFamily:
    """``"all"``, ``"all-but-top"`` (both need ``n``) or a list of element lists, given as JSON text
    or as a list. Without ``n`` the ground set is the largest element mentioned."""
    if isinstance(value, str) and value.strip().lower() in ("all", "all-but-top"):
        if not n:
            raise DomainError(f"family '{value}' needs n")
        if value.strip().lower() == "all":
            return SubsetFamily.all(n)
        return SubsetFamily.all_but_top(n)
    lists = _loads(value, "family")
    if not isinstance(lists, (list, tuple)) or not lists:
        raise DomainError(f"family must be all, all-but-top or a nonempty list, got {value!r}")
    if not all(isinstance(s, (list, tuple)) for s in lists):
        raise DomainError(f"family members are lists of elements, got {value!r}")
    size = n or max((max(s) for s in lists if s), default=0)
    return SubsetFamily.from_json(size, lists)


def parse_subset(value: Any, n: int) -> SubsetId:
    """``"1,3"``, ``"[1,3]"``, ``3`` or ``[1, 3]``."""
    if isinstance(value, int):
        return from_elements([value], n)
    if isinstance(value, str):
        try:
            items = [int(v) for v in value.strip("[]{} ").split(",") if v.strip()]
        except ValueError as e:
            raise DomainError(f"subsets read like 1,3, got {value!r}") from e
        return from_elements(items, n)
    return subset_from_json(list(value), n)


def parse_delta(value: Any, family: SubsetFamily) -> DeltaSpec:
    """Unit deltas when ``value`` is ``None``, a constant for an integer, otherwise a list of
    ``[subset, delta]`` pairs or a ``{"n": .., "deltas": ..}`` document.

    Raises:
        InfeasibleError: if a member gets no positive delta.
        DomainError: if a non-member does.
    """
    value = _loads(value, "delta")
    if value is None:
        delta = DeltaSpec.for_family(family)
    elif isinstance(value, int):
        delta = DeltaSpec.for_family(family, value)
    elif isinstance(value, dict):
        delta = DeltaSpec.from_json(value)
    else:
        delta = DeltaSpec.from_map(
            family.n, {subset_from_json(s, family.n): int(d) for s, d in value}
        )
    if delta.n != family.n:
        raise DomainError(f"deltas live on n={delta.n}, the family on n={family.n}")
    vanishing = [t for t in family.ordered if delta[t] <= 0]
    if vanishing:
        raise InfeasibleError(
            "members need a positive contrast, δ vanishes at "
            + ", ".join(format_subset(t) for t in vanishing),
            violations=vanishing,
        )
    outside = [t for t, d in enumerate(delta.deltas) if d and t not in family]
    if outside:
        raise DomainError(
            "contrast given for non-members " + ", ".join(format_subset(t) for t in outside)
        )
    return delta


def _budget(value: Any) -> SearchBudget:
    if isinstance(value, SearchBudget):
        return value
    return SearchBudget(**dict(value or {}))


@dataclass
class RunContext:
    """What every command needs besides its own arguments."""

    scheduler: Scheduler = field(default_factory=Scheduler)
    codec: Optional[ImageCodec] = None
    json: bool = False
    arguments: Dict[str, Any] = field(default_factory=dict)

    def emit(self, doc: Dict[str, Any], text: str) -> None:
        print(dump_json(doc).rstrip() if self.json else text)

    def record(
        self,
        command: str,
        artifact: str,
        inputs: Sequence[str],
        outputs: Sequence[str],
        seed: Optional[int] = None,
    ) -> str:
        manifest = RunManifest.collect(command, self.arguments, inputs, outputs, seed)
        return manifest.save(manifest_path(artifact))


def _path(path: str) -> str:
    return hydra.utils.to_absolute_path(path)


@dataclass
class Command(ABC):
    """Base class for all commands."""

    name: ClassVar[str] = ""

    @abstractmethod
    def run(self, ctx: RunContext) -> int:
        """Executes the command.

        Returns:
            int: Exit code, failures are raised as :class:`extvc.base.ExtVCError`.
        """


@dataclass
class CommandBuild(Command):
    """Builds a scheme table: ``droste`` (one threshold block per member), ``tight`` (from deltas
    or an explicit level map), ``improved`` (even subset construction, falling back to
    ``droste``) or ``realized`` (target contrasts within ``epsilon``)."""

    name: ClassVar[str] = "build"
    _target_: str = "extvc.cli.commands.CommandBuild"

    n: Optional[int] = None
    family: Any = "all"
    mode: str = "droste"
    delta: Any = None
    levels: Any = None
    alphas: Any = None
    epsilon: str = "1/100"
    certify: bool = False
    out: str = "table.json"

    def _build(self) -> SchemeTable:
        if self.mode == "realized":
            if not self.n:
                raise DomainError("mode realized needs n")
            targets = contrast_from_json(self.n, _loads(self.alphas, "alphas") or [])
            return realized_scheme(targets, Fraction(self.epsilon), self.n)
        family = parse_family(self.family, self.n)
        if self.mode == "droste":
            return droste_scheme(family)
        if self.mode == "tight":
            if self.levels is not None:
                levels = Levels.from_json(family.n, _loads(self.levels, "levels"))
                return build_scheme(family, levels, provenance={"construction": "tight"})
            delta = parse_delta(self.delta, family)
            return build_scheme(family, tight_levels(delta), provenance={"construction": "tight"})
        if self.mode == "improved":
            try:
                return improved_scheme(family)
            except (NotApplicableError, InfeasibleError) as e:
                message = f"improved construction not applicable ({e}), using droste"
                warnings.warn(message, UserWarning)
                logger.warning(message)
                return droste_scheme(family).with_provenance(fallback=str(e))
        raise DomainError(f"unknown mode {self.mode!r}, use droste, tight, improved or realized")

    def run(self, ctx: RunContext) -> int:
        table = self._build()
        if self.certify:
            table, cert = certify(table)
            if not cert.passed:
                raise VerificationError(f"built table fails certification: {cert.to_json()}")
        out = _path(self.out)
        table.save(out)
        logger.info("%s table with m=%d written to %s", self.mode, table.m, out)
        ctx.record(self.name, out, [], [out])
        ctx.emit(
            table.to_json(),
            f"{table.provenance.get('construction', self.mode)} table for {table.family}: "
            f"m={table.m} -> {out}",
        )
        return 0


@dataclass
class CommandVerify(Command):
    """Certifies a table (or explicit matrix collections) and writes the certificate.

    The collections file holds ``n``, ``family`` and ``collections``, a list of
    ``{"blacks": [[..], ..], "matrices": [..]}`` entries, plus optional ``levels``.
    """

    name: ClassVar[str] = "verify"
    _target_: str = "extvc.cli.commands.CommandVerify"

    table: Optional[str] = None
    matrices: Optional[str] = None
    out: Optional[str] = None
    certificate: Optional[str] = None

    def _load(self) -> SchemeTable:
        if self.table:
            return SchemeTable.load(_path(self.table))
        if not self.matrices:
            raise DomainError("verify needs a table or a matrices file")
        doc = load_json(_path(self.matrices))
        try:
            family = parse_family(doc["family"], doc.get("n"))
            collections = {
                family.encode(subset_from_json(b, family.n) for b in entry["blacks"]): entry[
                    "matrices"
                ]
                for entry in doc["collections"]
            }
        except (KeyError, TypeError) as e:
            raise DomainError(f"malformed collections file: {e!r}") from e
        levels = doc.get("levels")
        return import_collections(
            family, collections, Levels.from_json(family.n, levels) if levels else None
        )

    def run(self, ctx: RunContext) -> int:
        source = _path(self.table or self.matrices or "")
        table, cert = certify(self._load())
        out = _path(self.out) if self.out else (source if self.table else _path("table.json"))
        table.save(out)
        cert_path = (
            _path(self.certificate)
            if self.certificate
            else os.path.splitext(out)[0] + ".certificate.json"
        )
        cert.save(cert_path)
        ctx.record(self.name, out, [] if out == source else [source], [out, cert_path])
        status = "VERIFIED" if cert.passed else "FAILED"
        ctx.emit(
            cert.to_json(),
            f"{status}: contrast {cert.condition1.violations} violations, security "
            f"{cert.condition2.violations} violations (certificate {cert_path})",
        )
        if not cert.passed:
            raise VerificationError(f"table {cert.fingerprint[:12]} is not a scheme")
        return 0


@dataclass
class CommandEncode(Command):
    """Encodes secret images into shares; ``secrets`` lists ``T=path`` items such as
    ``'1,2=both.pbm'``."""

    name: ClassVar[str] = "encode"
    _target_: str = "extvc.cli.commands.CommandEncode"

    table: str = MISSING
    secrets: List[str] = field(default_factory=list)
    seed: int = 0
    layout: Optional[str] = None
    out: str = "shares"

    def run(self, ctx: RunContext) -> int:
        if ctx.codec is None:
            raise DomainError("no image format configured")
        table_path = _path(self.table)
        table = SchemeTable.load(table_path)
        paths = {}
        for item in self.secrets:
            subset, sep, path = str(item).partition("=")
            if not sep:
                raise DomainError(f"secrets read like T=path, got {item!r}")
            paths[parse_subset(subset, table.n)] = _path(path)
        images = {t: ctx.codec.read(p) for t, p in paths.items()}
        shares = encode(
            images,
            table,
            seed=self.seed,
            layout=Layout.parse(self.layout) if self.layout else None,
            scheduler=ctx.scheduler,
        )
        out = _path(self.out)
        written = shares.save(out, ext=ctx.codec.ext, plain=bool(ctx.codec.kwargs.get("plain")))
        ctx.record(self.name, out, [table_path, *paths.values()], written, seed=self.seed)
        ctx.emit(
            shares.metadata([os.path.basename(p) for p in written[:-1]]),
            f"{shares.n} shares of {shares.width}x{shares.height} pixels, layout {shares.layout}, "
            f"seed {shares.seed} -> {out}",
        )
        return 0


@dataclass
class CommandStack(Command):
    """Stacks the selected shares (pixelwise OR)."""

    name: ClassVar[str] = "stack"
    _target_: str = "extvc.cli.commands.CommandStack"

    shares: str = MISSING
    select: Any = MISSING
    out: Optional[str] = None

    def run(self, ctx: RunContext) -> int:
        if ctx.codec is None:
            raise DomainError("no image format configured")
        directory = _path(self.shares)
        shares = ShareSet.load(directory)
        which = parse_subset(self.select, shares.n)
        stacked = stack(shares, which)
        out = _path(self.out or f"stacked.{ctx.codec.ext}")
        ctx.codec.write(stacked, out)
        inputs = [os.path.join(directory, "shares.json")]
        ctx.record(self.name, out, inputs, [out])
        ctx.emit(
            make_document(
                "extvc.stack",
                select=elements(which),
                black=stacked.black_count(),
                path=out,
            ),
            f"stack of {format_subset(which)}: {stacked.black_count()} black subpixels -> {out}",
        )
        return 0


@dataclass
class CommandMeasure(Command):
    """Measures the black counts a stack shows over the black and white pixels of a secret. The
    layout comes from ``layout`` (``RxC``) or from the sidecar of ``shares``."""

    name: ClassVar[str] = "measure"
    _target_: str = "extvc.cli.commands.CommandMeasure"

    stacked: str = MISSING
    secret: str = MISSING
    layout: Optional[str] = None
    shares: Optional[str] = None

    def run(self, ctx: RunContext) -> int:
        if ctx.codec is None:
            raise DomainError("no image format configured")
        if self.layout:
            layout = Layout.parse(self.layout)
        elif self.shares:
            doc = load_json(os.path.join(_path(self.shares), "shares.json"))
            layout = Layout(*doc["layout"])
        else:
            raise DomainError("measure needs a layout or the shares directory")
        stacked = ctx.codec.read(_path(self.stacked))
        result = measure(stacked, ctx.codec.read(_path(self.secret)), layout)
        doc = make_document(
            "extvc.measurement",
            l=result.l,
            h=result.h,
            alpha=None if result.alpha is None else str(result.alpha),
            m_effective=result.m_effective,
        )
        parts = [
            f"l={'-' if result.l is None else result.l}",
            f"h={'-' if result.h is None else result.h}",
            f"alpha={'-' if result.alpha is None else result.alpha}",
            f"capacity={result.m_effective}",
        ]
        if result.h is None:
            parts.append("(no black pixels in the secret)")
        if result.l is None:
            parts.append("(no white pixels in the secret)")
        ctx.emit(doc, " ".join(parts))
        return 0


@dataclass
class CommandSearch(Command):
    """Certified minimum pixel expansion of a family."""

    name: ClassVar[str] = "search"
    _target_: str = "extvc.cli.commands.CommandSearch"

    n: Optional[int] = None
    family: Any = "all"
    delta: Any = None
    budget: SearchBudget = field(default_factory=SearchBudget)
    out: Optional[str] = None
    witness: Optional[str] = None

    def run(self, ctx: RunContext) -> int:
        family = parse_family(self.family, self.n)
        result = min_expansion(family, parse_delta(self.delta, family), _budget(self.budget))
        outputs = []
        if self.witness:
            witness = _path(self.witness)
            result.witness.save(witness)
            outputs.append(witness)
        if self.out:
            out = _path(self.out)
            dump_json(result.to_json(), out)
            outputs.append(out)
        if outputs:
            ctx.record(self.name, outputs[-1], [], outputs)
        found = f"m*={result.m_star}" if result.m_star is not None else "m* undecided"
        ctx.emit(
            result.to_json(),
            f"{family}: {found} ({result.status}), droste {result.droste_m}, "
            f"bounds [{result.lower_bound}, {result.upper_bound}], {result.nodes} nodes",
        )
        return 0


@dataclass
class CommandGap(Command):
    """Straightforward against improved against optimal expansion."""

    name: ClassVar[str] = "gap"
    _target_: str = "extvc.cli.commands.CommandGap"

    n: Optional[int] = None
    family: Any = "all-but-top"
    budget: SearchBudget = field(default_factory=SearchBudget)
    out: Optional[str] = None

    def run(self, ctx: RunContext) -> int:
        report = droste_gap(parse_family(self.family, self.n), _budget(self.budget))
        if self.out:
            out = _path(self.out)
            dump_json(report.to_json(), out)
            ctx.record(self.name, out, [], [out])
        ctx.emit(report.to_json(), report.to_frame().T.to_string(header=False))
        return 0


@dataclass
class CommandConjecture(Command):
    """Scans families of one ground set for agreement with the optimality conjecture."""

    name: ClassVar[str] = "conjecture"
    _target_: str = "extvc.cli.commands.CommandConjecture"

    n: int = 3
    sample: Optional[int] = None
    seed: int = 0
    budget: SearchBudget = field(default_factory=SearchBudget)
    out: str = "conjecture.csv"

    def run(self, ctx: RunContext) -> int:
        df = conjecture_scan(
            self.n, ctx.scheduler, _budget(self.budget), sample=self.sample, seed=self.seed
        )
        out = _path(self.out)
        atomic_write(out, df.to_csv(index=False))
        ctx.record(self.name, out, [], [out], seed=self.seed)
        counter = df[df["counterexample"]]
        ctx.emit(
            make_document(
                "extvc.conjecture-scan",
                n=self.n,
                families=len(df),
                settled=int(df["agree"].notna().sum()),
                counterexamples=json.loads(counter.to_json(orient="records")),
                path=out,
            ),
            f"n={self.n}: {len(df)} families, {int(df['agree'].notna().sum())} settled, "
            f"{len(counter)} counterexamples -> {out}",
        )
        return 0


@dataclass
class CommandReport(Command):
    """Prints a summary of a table."""

    name: ClassVar[str] = "report"
    _target_: str = "extvc.cli.commands.CommandReport"

    table: str = MISSING
    templates: Optional[List[str]] = None

    def run(self, ctx: RunContext) -> int:
        report = TableReport(SchemeTable.load(_path(self.table)), template_paths=self.templates)
        ctx.emit(report.to_json(), report.text)
        return 0
