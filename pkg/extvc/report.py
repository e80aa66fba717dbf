"""Human-readable summary of a scheme table: levels, contrasts, trade-off and bounds."""
from typing import Any, Dict, List, Optional
from fractions import Fraction

import pandas as pd
from jinja2 import Template

from extvc import jinja_utils as ju
from extvc.base import fraction_to_json, make_document
from extvc.contrast import DeltaSpec, alphas, droste_expansion, sublattice_bound, tradeoff_sum
from extvc.lattice import cardinality, nonempty_subsets, subset_to_json
from extvc.misc import lazyproperty
from extvc.scheme import SchemeTable


__all__ = ["JINJA_FILE_SEARCHPATHS", "REPORT_FORMAT", "TableReport"]


JINJA_FILE_SEARCHPATHS = [
    "./extvc/templates/text",
    "./templates/text",
    "~/.extvc/templates/text",
]

REPORT_FORMAT = "extvc.table-report"


class TableReport:
    """Summary of one table, rendered from ``TableReport.txt.j2``.

    Args:
        table (SchemeTable): The table to describe; certification is reported, not performed.
        template_paths (Optional[List[str]]): Directories searched before the packaged templates.
    """

    def __init__(self, table: SchemeTable, template_paths: Optional[List[str]] = None) -> None:
        self.table = table
        self._template_paths = template_paths

    @property
    def construction(self) -> str:
        return str(self.table.provenance.get("construction", "unknown"))

    @property
    def droste_m(self) -> int:
        return droste_expansion(self.table.family)

    @lazyproperty
    def contrasts(self) -> Dict[int, Fraction]:
        return alphas(self.table.levels, max(self.table.m, 1), self.table.family)

    @lazyproperty
    def tradeoff(self) -> Fraction:
        return tradeoff_sum({t: max(a, Fraction(0)) for t, a in self.contrasts.items()})

    @lazyproperty
    def lower_bound(self) -> int:
        """Expansion no scheme with the same contrast differences can beat."""
        levels = self.table.levels
        delta = DeltaSpec.from_map(
            self.table.n, {t: max(levels.delta(t), 0) for t in self.table.family}
        )
        return sublattice_bound(self.table.family, delta)

    def rows(self) -> List[Dict[str, Any]]:
        levels = self.table.levels
        rows = []
        for t in nonempty_subsets(self.table.n):
            h, l = levels[t]  # noqa: E741
            rows.append(
                dict(
                    subset=t,
                    size=cardinality(t),
                    member=t in self.table.family,
                    h=h,
                    l=l,
                    alpha=self.contrasts.get(t),
                )
            )
        return rows

    def to_frame(self) -> pd.DataFrame:
        df = pd.DataFrame(self.rows())
        df["subset"] = df["subset"].map(subset_to_json).map(str)
        return df.set_index("subset")

    def to_json(self) -> Dict[str, Any]:
        return make_document(
            REPORT_FORMAT,
            n=self.table.n,
            family=self.table.family.to_json(),
            m=self.table.m,
            construction=self.construction,
            verified=self.table.verified,
            fingerprint=self.table.fingerprint,
            droste_m=self.droste_m,
            lower_bound=self.lower_bound,
            tradeoff_sum=fraction_to_json(self.tradeoff),
            alphas=[[subset_to_json(t), fraction_to_json(a)] for t, a in self.contrasts.items()],
            levels=self.table.levels.to_json(),
        )

    def _get_template(self, path: str) -> Template:
        env = ju.create_jinja_env(
            paths=self._template_paths,
            search_paths=JINJA_FILE_SEARCHPATHS,
            pkg_path="templates/text",
            check="_base.txt.j2",
        )
        return env.get_template(path)

    @lazyproperty
    def text(self) -> str:
        """
        Returns:
            str: The report as plain text.
        """
        template = self._get_template(f"{self.__class__.__name__}.txt.j2")
        return template.render(obj=self, table=self.table)

    def __str__(self) -> str:
        return self.text
