"""Percentile scaling of indicator scores within comparison cohorts.

Percentiles run 0-100 from worst to best.  Ties receive the average of the
ranks they occupy (midrank); a singleton cohort scores 50.  Cohorts are one
field (SDS) at one academic rank; this pipeline covers the full-professor
rank only.
"""

from __future__ import annotations

import math
from typing import Mapping, Sequence

import numpy as np

from .corpus import Professor
from .indicators import INDICATORS, IndicatorScores

FULL_PROFESSOR = "full"


def percentile_rank(values: Sequence[float]) -> list[float]:
    """Midrank percentiles: 100 * (rank - 1) / (n - 1)."""
    n = len(values)
    if n == 0:
        raise ValueError("empty cohort")
    arr = np.asarray(values, dtype=float)
    if np.isnan(arr).any():
        raise ValueError("cohort contains NaN")
    if n == 1:
        return [50.0]
    order = np.argsort(arr, kind="mergesort")
    sorted_vals = arr[order]
    ranks = np.empty(n, dtype=float)
    i = 0
    while i < n:
        j = i
        while j + 1 < n and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2 + 1  # 1-based midrank
        i = j + 1
    return (100.0 * (ranks - 1.0) / (n - 1)).tolist()


def cohort_percentiles(roster: Sequence[Professor],
                       scores: Mapping[str, IndicatorScores],
                       rank: str = FULL_PROFESSOR) -> dict[str, dict[str, float]]:
    """Percentile of every professor, per indicator, within (SDS, rank) cohorts.

    FSS and P cover everybody (inactive professors keep their zeros); IA and
    IJ cohorts contain only professors with a defined value, so undefined
    entries are simply absent from the result.
    """
    del rank  # single-rank pipeline; cohorts are per SDS
    groups: dict[str, list[Professor]] = {}
    for prof in roster:
        if prof.id not in scores:
            raise KeyError(f"no scores for professor {prof.id}")
        groups.setdefault(prof.sds, []).append(prof)

    out: dict[str, dict[str, float]] = {p.id: {} for p in roster}
    for members in groups.values():
        for indicator in INDICATORS:
            holders = [p for p in members if scores[p.id].value(indicator) is not None]
            if not holders:
                continue
            values = [scores[p.id].value(indicator) for p in holders]
            for prof, pct in zip(holders, percentile_rank(values)):
                out[prof.id][indicator] = pct
    return out
