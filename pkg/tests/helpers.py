"""Record builders shared across test modules."""

from __future__ import annotations

from datetime import date

from resperf.corpus import Authorship, Corpus, Professor, Publication


def make_professor(id="P1", gender="male", birth=date(1950, 6, 30),
                   appointed=date(1985, 3, 1), sds="MAT/01", uda="MAT",
                   university_type="public", span=None) -> Professor:
    return Professor(id=id, gender=gender, birth_date=birth,
                     appointment_date=appointed, sds=sds, uda=uda,
                     university_type=university_type, active_span=span)


def make_publication(id="W1", year=2008, category="MAT/01", journal_if=1.5,
                     citations=4, doc_type="article",
                     byline=(("P1", "U1"),)) -> Publication:
    return Publication(id=id, year=year, subject_category=category,
                       journal_if=journal_if, citations=citations,
                       doc_type=doc_type,
                       byline=tuple(Authorship(a, u) for a, u in byline))


def build_tiny_world() -> tuple[list[Professor], Corpus]:
    """Four professors in two fields, twelve publications (one pre-window)."""
    roster = [
        make_professor("P1", sds="MAT/01", uda="MAT"),
        make_professor("P2", gender="female", birth=date(1955, 2, 10),
                       appointed=date(1990, 10, 1), sds="MAT/01", uda="MAT",
                       university_type="polytechnic"),
        make_professor("P3", birth=date(1948, 12, 1), appointed=date(1980, 1, 7),
                       sds="BIO/05", uda="BIO", university_type="private"),
        make_professor("P4", gender="female", birth=date(1962, 7, 23),
                       appointed=date(2004, 11, 1), sds="BIO/05", uda="BIO"),
    ]
    pubs = [
        make_publication("W01", 2006, "MAT/01", 1.2, 10, byline=(("P1", "U1"), ("X1", "U2"))),
        make_publication("W02", 2007, "MAT/01", 0.8, 0, byline=(("P1", "U1"),)),
        make_publication("W03", 2008, "MAT/01", 1.9, 3, byline=(("P2", "U3"), ("X2", "U9"))),
        make_publication("W04", 2008, "MAT/01", 1.1, 5, byline=(("P1", "U1"), ("P2", "U3"), ("X3", "U4"))),
        make_publication("W05", 2010, "MAT/01", 2.4, 1, byline=(("X4", "U5"), ("P2", "U3"))),
        make_publication("W06", 2006, "BIO/05", 3.4, 12, byline=(("P3", "U6"), ("X5", "U7"), ("X6", "U6"))),
        make_publication("W07", 2007, "BIO/05", 2.2, 7, byline=(("X7", "U8"), ("P3", "U6"), ("X8", "U6"))),
        make_publication("W08", 2008, "BIO/05", 4.0, 0, byline=(("P3", "U6"), ("P4", "U2"))),
        make_publication("W09", 2009, "BIO/05", 1.7, 2, byline=(("P4", "U2"), ("X9", "U2"))),
        make_publication("W10", 2009, "BIO/05", 2.9, 9, byline=(("X10", "U3"), ("X11", "U3"), ("P4", "U2"))),
        make_publication("W11", 2010, "BIO/05", 3.1, 4, byline=(("P3", "U6"), ("X12", "U9"), ("X13", "U6"), ("P4", "U2"))),
        make_publication("W12", 2005, "BIO/05", 2.0, 30, byline=(("P3", "U6"),)),
    ]
    return roster, Corpus(pubs)
