"""Roster and publication ingestion plus census-date covariate derivation.

Rosters are CSV; publication corpora are CSV or JSON-lines (one object per
line).  Ingestion either returns fully validated records or fails with a
row-addressed error listing every problem found.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass
from datetime import date
from pathlib import Path
from typing import Iterable, Mapping, NamedTuple, Sequence

logger = logging.getLogger(__name__)

DAYS_PER_YEAR = 365.2425

UNIVERSITY_TYPES = ("public", "private", "polytechnic", "advanced_school")

# Document types dropped at ingest: editorial/abstract/reply material does not
# count as a research product.
DEFAULT_EXCLUDED_DOC_TYPES = frozenset({
    "editorial material",
    "conference abstract",
    "conference abstracts",
    "reply",
    "replies",
})

ROSTER_FIELDS = ("id", "gender", "birth_date", "appointment_date", "sds", "uda",
                 "university_type")
ROSTER_OPTIONAL_FIELDS = ("active_start", "active_end")

PUBLICATION_FIELDS = ("id", "year", "subject_category", "journal_if",
                      "citations", "doc_type", "byline")

# Minimum age at appointment, in whole years.
MIN_APPOINTMENT_AGE = 20

# Appointment dates within this many years of the census flag a professor as
# recently promoted.
RECENT_PROMOTION_YEARS = 8.0


class IngestError(ValueError):
    """Raised when an input file fails validation; carries row-addressed messages."""

    def __init__(self, source, problems: Sequence[str]):
        self.source = str(source)
        self.problems = list(problems)
        shown = "; ".join(self.problems[:8])
        extra = "" if len(self.problems) <= 8 else f" (+{len(self.problems) - 8} more)"
        super().__init__(f"{self.source}: {shown}{extra}")


class Authorship(NamedTuple):
    author_id: str
    university_id: str


@dataclass(frozen=True)
class Professor:
    id: str
    gender: str  # "male" | "female"
    birth_date: date
    appointment_date: date
    sds: str
    uda: str
    university_type: str
    active_span: tuple[date, date] | None = None


@dataclass(frozen=True)
class Publication:
    id: str
    year: int
    subject_category: str
    journal_if: float | None
    citations: int
    doc_type: str
    byline: tuple[Authorship, ...]


@dataclass(frozen=True)
class Covariates:
    """Professor covariates at a census date.

    ``age`` and ``seniority`` are exact day-difference/365.2425 values (these
    feed the regressions and are shown to 2 decimals in reports);
    ``age_years``/``seniority_years`` are the completed whole-year counts.
    ``t`` is the fractional-year overlap of the active span with the
    observation window.
    """

    age: float
    seniority: float
    age_years: int
    seniority_years: int
    gender_dummy: int   # 1 = male
    u1: int             # private university
    u2: int             # advanced school
    u3: int             # polytechnic
    t: float
    recently_promoted: bool


class Corpus:
    """Validated publication collection with a per-author position index.

    Treated as read-only after construction.
    """

    def __init__(self, publications: Iterable[Publication], dropped: int = 0):
        self.publications: tuple[Publication, ...] = tuple(publications)
        self.dropped = dropped
        index: dict[str, list[tuple[int, int]]] = {}
        for p_idx, pub in enumerate(self.publications):
            for pos, auth in enumerate(pub.byline):
                index.setdefault(auth.author_id, []).append((p_idx, pos))
        self._by_author = index

    def __len__(self) -> int:
        return len(self.publications)

    def authored_by(self, author_id: str,
                    window: tuple[int, int] | None = None
                    ) -> list[tuple[Publication, int]]:
        """(publication, byline position) pairs for one author, window-filtered."""
        out = []
        for p_idx, pos in self._by_author.get(author_id, ()):
            pub = self.publications[p_idx]
            if window is None or window[0] <= pub.year <= window[1]:
                out.append((pub, pos))
        return out


def exact_years(start: date, end: date) -> float:
    return (end - start).days / DAYS_PER_YEAR


def whole_years(start: date, end: date) -> int:
    """Completed years from start to end (anniversary arithmetic)."""
    years = end.year - start.year
    if (end.month, end.day) < (start.month, start.day):
        years -= 1
    return years


def _parse_date(text: str, what: str, problems: list[str], line: int) -> date | None:
    try:
        return date.fromisoformat(text.strip())
    except ValueError:
        problems.append(f"line {line}: unparseable {what} {text!r}")
        return None


def _parse_gender(text: str, problems: list[str], line: int) -> str | None:
    token = text.strip().lower()
    if token in ("m", "male"):
        return "male"
    if token in ("f", "female"):
        return "female"
    problems.append(f"line {line}: gender must be M or F, got {text!r}")
    return None


def ingest_roster(path, sds_map: Mapping[str, str] | None = None) -> list[Professor]:
    """Read a professor roster CSV.

    ``sds_map`` optionally maps field (SDS) codes to their discipline (UDA);
    when given, every row's SDS must appear in it with a matching UDA.  Either
    every row parses or an :class:`IngestError` reports all offending rows.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in ROSTER_FIELDS if c not in header]
        if missing:
            raise IngestError(path, [f"missing required columns: {', '.join(missing)}"])
        has_span = all(c in header for c in ROSTER_OPTIONAL_FIELDS)

        professors: list[Professor] = []
        problems: list[str] = []
        seen: dict[str, int] = {}
        sds_to_uda: dict[str, tuple[str, int]] = {}
        n_rows = 0
        for row in reader:
            n_rows += 1
            line = reader.line_num
            pid = (row.get("id") or "").strip()
            if not pid:
                problems.append(f"line {line}: empty id")
                continue
            if pid in seen:
                problems.append(
                    f"line {line}: duplicate id {pid!r} (first seen on line {seen[pid]})")
                continue
            seen[pid] = line

            gender = _parse_gender(row.get("gender") or "", problems, line)
            birth = _parse_date(row.get("birth_date") or "", "birth_date", problems, line)
            appointed = _parse_date(row.get("appointment_date") or "",
                                    "appointment_date", problems, line)
            sds = (row.get("sds") or "").strip()
            uda = (row.get("uda") or "").strip()
            utype = (row.get("university_type") or "").strip().lower()

            if not sds or not uda:
                problems.append(f"line {line}: empty sds or uda")
                continue
            if utype not in UNIVERSITY_TYPES:
                problems.append(
                    f"line {line}: unknown university_type {row.get('university_type')!r}")
                continue
            if sds_map is not None:
                if sds not in sds_map:
                    problems.append(f"line {line}: unknown SDS code {sds!r}")
                    continue
                if sds_map[sds] != uda:
                    problems.append(
                        f"line {line}: sds {sds!r} maps to uda {sds_map[sds]!r}, row says {uda!r}")
                    continue
            if sds in sds_to_uda and sds_to_uda[sds][0] != uda:
                problems.append(
                    f"line {line}: sds {sds!r} listed under uda {uda!r} but line "
                    f"{sds_to_uda[sds][1]} has uda {sds_to_uda[sds][0]!r}")
                continue
            sds_to_uda.setdefault(sds, (uda, line))

            if gender is None or birth is None or appointed is None:
                continue
            if whole_years(birth, appointed) < MIN_APPOINTMENT_AGE:
                problems.append(
                    f"line {line}: appointed at {whole_years(birth, appointed)} "
                    f"(before age {MIN_APPOINTMENT_AGE})")
                continue

            span = None
            if has_span:
                s_raw = (row.get("active_start") or "").strip()
                e_raw = (row.get("active_end") or "").strip()
                if s_raw or e_raw:
                    if not (s_raw and e_raw):
                        problems.append(
                            f"line {line}: active_start/active_end must be given together")
                        continue
                    s = _parse_date(s_raw, "active_start", problems, line)
                    e = _parse_date(e_raw, "active_end", problems, line)
                    if s is None or e is None:
                        continue
                    if s > e:
                        problems.append(f"line {line}: active_start after active_end")
                        continue
                    span = (s, e)

            professors.append(Professor(pid, gender, birth, appointed, sds, uda,
                                        utype, span))

    if problems:
        raise IngestError(path, problems)
    if n_rows == 0:
        logger.warning("%s: empty roster", path)
    return professors


def _parse_byline(raw, problems: list[str], line: int) -> tuple[Authorship, ...] | None:
    if isinstance(raw, str):
        tokens = [t for t in raw.split(";") if t.strip()]
    else:
        tokens = list(raw)
    if not tokens:
        problems.append(f"line {line}: empty byline")
        return None
    byline = []
    for token in tokens:
        parts = str(token).strip().split("@")
        if len(parts) != 2 or not parts[0] or not parts[1]:
            problems.append(f"line {line}: malformed byline token {token!r}")
            return None
        byline.append(Authorship(parts[0], parts[1]))
    return tuple(byline)


def _pub_from_record(rec: Mapping, line: int, problems: list[str],
                     roster_ids, strict: bool) -> Publication | None:
    pid = str(rec.get("id") or "").strip()
    if not pid:
        problems.append(f"line {line}: empty publication id")
        return None
    try:
        year = int(rec.get("year"))
    except (TypeError, ValueError):
        problems.append(f"line {line}: unparseable year {rec.get('year')!r}")
        return None
    if not 1900 <= year <= 2100:
        problems.append(f"line {line}: year {year} out of range")
        return None
    category = str(rec.get("subject_category") or "").strip()
    if not category:
        problems.append(f"line {line}: empty subject_category")
        return None

    if_raw = rec.get("journal_if")
    journal_if: float | None
    if if_raw is None or (isinstance(if_raw, str) and not if_raw.strip()):
        journal_if = None
    else:
        try:
            journal_if = float(if_raw)
        except (TypeError, ValueError):
            problems.append(f"line {line}: unparseable journal_if {if_raw!r}")
            return None
        if journal_if < 0:
            problems.append(f"line {line}: negative journal_if {journal_if}")
            return None

    try:
        citations = int(rec.get("citations"))
    except (TypeError, ValueError):
        problems.append(f"line {line}: unparseable citations {rec.get('citations')!r}")
        return None
    if citations < 0:
        problems.append(f"line {line}: negative citations {citations}")
        return None

    doc_type = str(rec.get("doc_type") or "").strip()
    byline = _parse_byline(rec.get("byline") or "", problems, line)
    if byline is None:
        return None
    if strict and roster_ids is not None:
        unknown = [a.author_id for a in byline if a.author_id not in roster_ids]
        if unknown:
            problems.append(f"line {line}: unknown author id(s) {', '.join(unknown)}")
            return None
    return Publication(pid, year, category, journal_if, citations, doc_type, byline)


def ingest_publications(path,
                        excluded_doc_types: Iterable[str] = DEFAULT_EXCLUDED_DOC_TYPES,
                        roster_ids=None,
                        strict: bool = False) -> Corpus:
    """Read a publication corpus (CSV, or JSON-lines for .jsonl/.ndjson/.json).

    Rows whose doc_type is in ``excluded_doc_types`` (case-insensitive) are
    dropped before validation and counted in ``Corpus.dropped``.  With
    ``strict`` every byline author id must appear in ``roster_ids``.
    """
    path = Path(path)
    excluded = {t.strip().lower() for t in excluded_doc_types}
    records: list[tuple[int, Mapping]] = []
    problems: list[str] = []

    if path.suffix.lower() in (".jsonl", ".ndjson", ".json"):
        with path.open(encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    rec = json.loads(line)
                except json.JSONDecodeError as exc:
                    problems.append(f"line {line_no}: invalid JSON ({exc.msg})")
                    continue
                records.append((line_no, rec))
    else:
        with path.open(newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            header = reader.fieldnames or []
            missing = [c for c in PUBLICATION_FIELDS if c not in header]
            if missing:
                raise IngestError(path, [f"missing required columns: {', '.join(missing)}"])
            for row in reader:
                records.append((reader.line_num, row))

    dropped = 0
    pubs: list[Publication] = []
    seen: dict[str, int] = {}
    for line, rec in records:
        doc_type = str(rec.get("doc_type") or "").strip().lower()
        if doc_type in excluded:
            dropped += 1
            continue
        pub = _pub_from_record(rec, line, problems, roster_ids, strict)
        if pub is None:
            continue
        if pub.id in seen:
            problems.append(
                f"line {line}: duplicate publication id {pub.id!r} "
                f"(first seen on line {seen[pub.id]})")
            continue
        seen[pub.id] = line
        pubs.append(pub)

    if problems:
        raise IngestError(path, problems)
    if not records:
        logger.warning("%s: empty publication file", path)
    return Corpus(pubs, dropped=dropped)


def _fmt_float(x: float | None) -> str:
    return "" if x is None else repr(float(x))


def write_roster(path, roster: Iterable[Professor]) -> None:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(ROSTER_FIELDS + ROSTER_OPTIONAL_FIELDS)
        for p in roster:
            start, end = ("", "")
            if p.active_span is not None:
                start, end = p.active_span[0].isoformat(), p.active_span[1].isoformat()
            writer.writerow([p.id, "M" if p.gender == "male" else "F",
                             p.birth_date.isoformat(), p.appointment_date.isoformat(),
                             p.sds, p.uda, p.university_type, start, end])


def write_publications(path, corpus: Corpus | Iterable[Publication]) -> None:
    pubs = corpus.publications if isinstance(corpus, Corpus) else tuple(corpus)
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(PUBLICATION_FIELDS)
        for pub in pubs:
            byline = ";".join(f"{a.author_id}@{a.university_id}" for a in pub.byline)
            writer.writerow([pub.id, pub.year, pub.subject_category,
                             _fmt_float(pub.journal_if), pub.citations,
                             pub.doc_type, byline])


def load_sds_map(path) -> dict[str, str]:
    """Two-column CSV mapping field (SDS) codes to discipline (UDA) codes."""
    path = Path(path)
    mapping: dict[str, str] = {}
    problems: list[str] = []
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        for i, row in enumerate(reader, start=1):
            if not row or (i == 1 and row[0].strip().lower() == "sds"):
                continue
            if len(row) < 2 or not row[0].strip() or not row[1].strip():
                problems.append(f"line {i}: expected 'sds,uda'")
                continue
            sds, uda = row[0].strip(), row[1].strip()
            if sds in mapping and mapping[sds] != uda:
                problems.append(f"line {i}: sds {sds!r} mapped to two udas")
                continue
            mapping[sds] = uda
    if problems:
        raise IngestError(path, problems)
    return mapping


def working_years(active_span: tuple[date, date] | None,
                  window: tuple[int, int]) -> float:
    """Fractional years of the active span inside the observation window.

    Each calendar year contributes (covered days)/(days in that year), so a
    span covering the whole window yields exactly the window length in years.
    """
    start_year, end_year = window
    if start_year > end_year:
        raise ValueError(f"invalid window {window}")
    if active_span is None:
        return float(end_year - start_year + 1)
    a, b = active_span
    total = 0.0
    for year in range(start_year, end_year + 1):
        y0, y1 = date(year, 1, 1), date(year, 12, 31)
        lo, hi = max(a, y0), min(b, y1)
        if lo <= hi:
            days_in_year = (date(year + 1, 1, 1) - y0).days
            total += ((hi - lo).days + 1) / days_in_year
    return total


def derive_covariates(professor: Professor, census_date: date,
                      window: tuple[int, int]) -> Covariates:
    """Covariates at the census date: exact and whole-year age/seniority,
    regression dummies, and working years t inside the window."""
    if census_date <= professor.birth_date:
        raise ValueError(f"{professor.id}: census date before birth")
    if census_date < professor.appointment_date:
        raise ValueError(f"{professor.id}: census date before appointment")

    age = exact_years(professor.birth_date, census_date)
    seniority = exact_years(professor.appointment_date, census_date)
    t = working_years(professor.active_span, window)
    if t <= 0:
        raise ValueError(f"{professor.id}: no working years inside window {window}")

    utype = professor.university_type
    return Covariates(
        age=age,
        seniority=seniority,
        age_years=whole_years(professor.birth_date, census_date),
        seniority_years=whole_years(professor.appointment_date, census_date),
        gender_dummy=1 if professor.gender == "male" else 0,
        u1=1 if utype == "private" else 0,
        u2=1 if utype == "advanced_school" else 0,
        u3=1 if utype == "polytechnic" else 0,
        t=t,
        recently_promoted=seniority < RECENT_PROMOTION_YEARS,
    )
