"""Field-normalized performance indicators.

Citations and journal impact factors are rescaled against the mean of the
publication's (year, subject category) cell before aggregation, which makes
scores comparable across fields:

* FSS — yearly rate of fractionally-credited normalized citations:
  (1/t) * sum_i (c_i / cbar_i) * f_i
* P   — yearly publication rate: N / t
* IA  — mean normalized citations per publication: (1/N) * sum_i c_i / cbar_i
* IJ  — mean normalized journal impact factor: (1/N) * sum_i if_i / ifbar_i

cbar is the cell mean over cited publications only; ifbar is the cell mean
over publications with a known impact factor.  Uncited publications add zero
to the FSS and IA sums but still count in N.  Professors without window
publications score FSS = P = 0 and have IA/IJ undefined.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable

from .corpus import Corpus, Professor, Publication, working_years
from .credit import ConventionMap, fractional_contribution

logger = logging.getLogger(__name__)

INDICATORS = ("FSS", "P", "IA", "IJ")


class MissingCellError(ValueError):
    """A (year, subject category) scaling cell needed in strict mode is absent."""


@dataclass(frozen=True)
class CellStats:
    mean_citations_cited: float | None   # mean citations over cited pubs
    mean_impact_factor: float | None     # mean IF over pubs with known IF


class ScalingTable:
    """Per-(year, subject_category) normalization means."""

    def __init__(self, cells: dict[tuple[int, str], CellStats]):
        self._cells = dict(cells)

    def __len__(self) -> int:
        return len(self._cells)

    def cell(self, year: int, category: str) -> CellStats | None:
        return self._cells.get((year, category))

    def mean_citations(self, year: int, category: str) -> float | None:
        stats = self._cells.get((year, category))
        return None if stats is None else stats.mean_citations_cited

    def mean_impact_factor(self, year: int, category: str) -> float | None:
        stats = self._cells.get((year, category))
        return None if stats is None else stats.mean_impact_factor


def build_scaling_table(corpus: Corpus | Iterable[Publication]) -> ScalingTable:
    """Compute cell means from a corpus.  The corpus must be nonempty."""
    pubs = corpus.publications if isinstance(corpus, Corpus) else tuple(corpus)
    if not pubs:
        raise ValueError("cannot build a scaling table from an empty corpus")
    cited: dict[tuple[int, str], list[int]] = {}
    impact: dict[tuple[int, str], list[float]] = {}
    keys: dict[tuple[int, str], None] = {}
    for pub in pubs:
        key = (pub.year, pub.subject_category)
        keys[key] = None
        if pub.citations > 0:
            cited.setdefault(key, []).append(pub.citations)
        if pub.journal_if is not None:
            impact.setdefault(key, []).append(pub.journal_if)
    cells = {}
    for key in keys:
        cs = cited.get(key)
        ifs = impact.get(key)
        cells[key] = CellStats(
            mean_citations_cited=sum(cs) / len(cs) if cs else None,
            mean_impact_factor=sum(ifs) / len(ifs) if ifs else None,
        )
    return ScalingTable(cells)


@dataclass(frozen=True)
class IndicatorScores:
    fss: float
    p: float
    ia: float | None
    ij: float | None
    n_pubs: int

    @property
    def inactive(self) -> bool:
        return self.n_pubs == 0

    def value(self, indicator: str) -> float | None:
        return {"FSS": self.fss, "P": self.p, "IA": self.ia, "IJ": self.ij}[indicator]


def _citation_ratio(pub: Publication, scaling: ScalingTable, strict: bool,
                    owner: str) -> float | None:
    """c_i/cbar, or None when the pub is skipped (lenient missing cell)."""
    if pub.citations == 0:
        return 0.0
    cbar = scaling.mean_citations(pub.year, pub.subject_category)
    if cbar is None:
        if strict:
            raise MissingCellError(
                f"{owner}: no citation scaling cell for "
                f"({pub.year}, {pub.subject_category!r})")
        logger.warning("%s: skipping %s, no citation scaling cell for (%s, %s)",
                       owner, pub.id, pub.year, pub.subject_category)
        return None
    return pub.citations / cbar


def _impact_ratio(pub: Publication, scaling: ScalingTable, strict: bool,
                  owner: str) -> float | None:
    if pub.journal_if is None:
        if strict:
            raise MissingCellError(f"{owner}: publication {pub.id} has no impact factor")
        logger.warning("%s: skipping %s, unknown impact factor", owner, pub.id)
        return None
    ifbar = scaling.mean_impact_factor(pub.year, pub.subject_category)
    if ifbar is None or ifbar == 0:
        if strict:
            raise MissingCellError(
                f"{owner}: no impact-factor scaling cell for "
                f"({pub.year}, {pub.subject_category!r})")
        logger.warning("%s: skipping %s, no impact-factor scaling cell for (%s, %s)",
                       owner, pub.id, pub.year, pub.subject_category)
        return None
    return pub.journal_if / ifbar


def compute_fss(professor: Professor, corpus: Corpus, scaling: ScalingTable,
                conventions: ConventionMap, window: tuple[int, int],
                strict: bool = False) -> float:
    """Fractional, field-normalized citation rate per working year."""
    t = working_years(professor.active_span, window)
    if t <= 0:
        raise ValueError(f"{professor.id}: no working years inside window {window}")
    convention = conventions.resolve(professor.sds, professor.uda)
    total = 0.0
    for pub, pos in corpus.authored_by(professor.id, window):
        ratio = _citation_ratio(pub, scaling, strict, professor.id)
        if ratio is None or ratio == 0.0:
            continue
        total += ratio * fractional_contribution(pub, pos, convention)
    return total / t


def compute_p(professor: Professor, corpus: Corpus,
              window: tuple[int, int]) -> float:
    """Publications per working year."""
    t = working_years(professor.active_span, window)
    if t <= 0:
        raise ValueError(f"{professor.id}: no working years inside window {window}")
    return len(corpus.authored_by(professor.id, window)) / t


def compute_ia(professor: Professor, corpus: Corpus, scaling: ScalingTable,
               window: tuple[int, int], strict: bool = False) -> float | None:
    """Mean normalized citations per publication; None without publications."""
    num, count = 0.0, 0
    for pub, _ in corpus.authored_by(professor.id, window):
        ratio = _citation_ratio(pub, scaling, strict, professor.id)
        if ratio is None:
            continue
        num += ratio
        count += 1
    return num / count if count else None


def compute_ij(professor: Professor, corpus: Corpus, scaling: ScalingTable,
               window: tuple[int, int], strict: bool = False) -> float | None:
    """Mean normalized journal impact factor; None without usable publications."""
    num, count = 0.0, 0
    for pub, _ in corpus.authored_by(professor.id, window):
        ratio = _impact_ratio(pub, scaling, strict, professor.id)
        if ratio is None:
            continue
        num += ratio
        count += 1
    return num / count if count else None


def compute_scores(professor: Professor, corpus: Corpus, scaling: ScalingTable,
                   conventions: ConventionMap, window: tuple[int, int],
                   strict: bool = False) -> IndicatorScores:
    """All four indicators for one professor."""
    n_pubs = len(corpus.authored_by(professor.id, window))
    return IndicatorScores(
        fss=compute_fss(professor, corpus, scaling, conventions, window, strict),
        p=compute_p(professor, corpus, window),
        ia=compute_ia(professor, corpus, scaling, window, strict),
        ij=compute_ij(professor, corpus, scaling, window, strict),
        n_pubs=n_pubs,
    )
