"""End-to-end orchestration: corpus -> credit -> indicators -> cohorts -> rows."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from datetime import date
from typing import Mapping, Sequence

from .cohort import cohort_percentiles
from .corpus import Corpus, Covariates, Professor, derive_covariates
from .credit import ConventionMap
from .indicators import (IndicatorScores, ScalingTable, build_scaling_table,
                         compute_scores)
from .regress import RegressionRow


def compute_indicator_scores(roster: Sequence[Professor], corpus: Corpus,
                             conventions: ConventionMap,
                             window: tuple[int, int],
                             strict: bool = False,
                             threads: int = 1,
                             scaling: ScalingTable | None = None
                             ) -> dict[str, IndicatorScores]:
    """Scores for every rostered professor, keyed by id.

    ``threads`` caps worker threads; results are collected in roster order so
    output never depends on the thread count.
    """
    if scaling is None:
        scaling = build_scaling_table(corpus) if len(corpus) else ScalingTable({})

    def one(prof: Professor) -> IndicatorScores:
        return compute_scores(prof, corpus, scaling, conventions, window, strict)

    if threads > 1 and len(roster) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one, roster))
    else:
        results = [one(p) for p in roster]
    return {prof.id: scores for prof, scores in zip(roster, results)}


def derive_all_covariates(roster: Sequence[Professor], census_date: date,
                          window: tuple[int, int]) -> dict[str, Covariates]:
    return {p.id: derive_covariates(p, census_date, window) for p in roster}


def regression_rows(roster: Sequence[Professor],
                    covariates: Mapping[str, Covariates],
                    percentiles: Mapping[str, Mapping[str, float]]
                    ) -> list[RegressionRow]:
    """Join roster, covariates and percentile scores into regression inputs."""
    rows = []
    for prof in roster:
        cov = covariates[prof.id]
        rows.append(RegressionRow(
            professor_id=prof.id,
            uda=prof.uda,
            age=cov.age,
            seniority=cov.seniority,
            gender=cov.gender_dummy,
            u1=cov.u1,
            u2=cov.u2,
            u3=cov.u3,
            percentiles=dict(percentiles.get(prof.id, {})),
        ))
    return rows


def run_scoring(roster: Sequence[Professor], corpus: Corpus,
                conventions: ConventionMap, census_date: date,
                window: tuple[int, int], strict: bool = False,
                threads: int = 1):
    """Full scoring pass: covariates, indicator scores, cohort percentiles, rows."""
    covariates = derive_all_covariates(roster, census_date, window)
    scores = compute_indicator_scores(roster, corpus, conventions, window,
                                      strict=strict, threads=threads)
    percentiles = cohort_percentiles(roster, scores)
    rows = regression_rows(roster, covariates, percentiles)
    return covariates, scores, percentiles, rows
