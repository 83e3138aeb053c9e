"""Ingestion validation and census-date covariate arithmetic."""

import logging
import math
from datetime import date

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import make_professor, make_publication
from resperf.corpus import (DAYS_PER_YEAR, Authorship, Corpus, IngestError,
                            derive_covariates, exact_years,
                            ingest_publications, ingest_roster, load_sds_map,
                            whole_years, working_years, write_publications,
                            write_roster)

ROSTER_HEADER = "id,gender,birth_date,appointment_date,sds,uda,university_type"
PUBS_HEADER = "id,year,subject_category,journal_if,citations,doc_type,byline"


def write_lines(path, header, *rows):
    path.write_text("\n".join([header, *rows]) + "\n", encoding="utf-8")
    return path


class TestRosterIngest:
    def test_happy_path(self, tmp_path):
        path = write_lines(
            tmp_path / "roster.csv", ROSTER_HEADER,
            "P1,M,1950-06-30,1985-03-01,MAT/01,MAT,public",
            "P2,f,1955-02-10,1990-10-01,BIO/05,BIO,Private")
        roster = ingest_roster(path)
        assert [p.id for p in roster] == ["P1", "P2"]
        assert roster[0].gender == "male" and roster[1].gender == "female"
        assert roster[1].university_type == "private"
        assert roster[0].birth_date == date(1950, 6, 30)
        assert roster[0].active_span is None

    def test_round_trip(self, tmp_path):
        roster = [make_professor("P1"),
                  make_professor("P2", gender="female", sds="BIO/05", uda="BIO",
                                 university_type="advanced_school",
                                 span=(date(2007, 3, 1), date(2010, 12, 31)))]
        path = tmp_path / "roster.csv"
        write_roster(path, roster)
        assert ingest_roster(path) == roster

    def test_duplicate_id_names_both_lines(self, tmp_path):
        path = write_lines(
            tmp_path / "roster.csv", ROSTER_HEADER,
            "P1,M,1950-06-30,1985-03-01,MAT/01,MAT,public",
            "P1,F,1960-01-01,1995-01-01,MAT/01,MAT,public")
        with pytest.raises(IngestError) as info:
            ingest_roster(path)
        assert "line 3" in str(info.value) and "line 2" in str(info.value)

    def test_appointment_before_age_twenty_rejected(self, tmp_path):
        path = write_lines(
            tmp_path / "roster.csv", ROSTER_HEADER,
            "P1,M,1970-06-30,1985-03-01,MAT/01,MAT,public")
        with pytest.raises(IngestError, match="before age 20"):
            ingest_roster(path)

    def test_twentieth_birthday_appointment_allowed(self, tmp_path):
        path = write_lines(
            tmp_path / "roster.csv", ROSTER_HEADER,
            "P1,M,1970-06-30,1990-06-30,MAT/01,MAT,public")
        assert len(ingest_roster(path)) == 1

    def test_all_problems_reported(self, tmp_path):
        path = write_lines(
            tmp_path / "roster.csv", ROSTER_HEADER,
            "P1,M,1950-13-40,1985-03-01,MAT/01,MAT,public",
            "P2,x,1950-06-30,1985-03-01,MAT/01,MAT,public",
            "P3,F,1950-06-30,1985-03-01,MAT/01,MAT,gymnasium",
            ",M,1950-06-30,1985-03-01,MAT/01,MAT,public")
        with pytest.raises(IngestError) as info:
            ingest_roster(path)
        assert len(info.value.problems) == 4

    def test_long_problem_lists_are_truncated(self, tmp_path):
        rows = [f"P{i},x,1950-06-30,1985-03-01,MAT/01,MAT,public" for i in range(12)]
        path = write_lines(tmp_path / "roster.csv", ROSTER_HEADER, *rows)
        with pytest.raises(IngestError) as info:
            ingest_roster(path)
        assert len(info.value.problems) == 12
        assert "+4 more" in str(info.value)

    def test_missing_column_rejected(self, tmp_path):
        path = write_lines(tmp_path / "roster.csv",
                           "id,gender,birth_date,appointment_date,sds,uda",
                           "P1,M,1950-06-30,1985-03-01,MAT/01,MAT")
        with pytest.raises(IngestError, match="university_type"):
            ingest_roster(path)

    def test_sds_map_validation(self, tmp_path):
        path = write_lines(
            tmp_path / "roster.csv", ROSTER_HEADER,
            "P1,M,1950-06-30,1985-03-01,MAT/01,MAT,public",
            "P2,M,1950-06-30,1985-03-01,MAT/99,MAT,public",
            "P3,M,1950-06-30,1985-03-01,BIO/05,MAT,public")
        sds_map = {"MAT/01": "MAT", "BIO/05": "BIO"}
        with pytest.raises(IngestError) as info:
            ingest_roster(path, sds_map)
        assert any("unknown SDS" in p for p in info.value.problems)
        assert any("maps to uda" in p for p in info.value.problems)

    def test_inconsistent_sds_uda_within_file(self, tmp_path):
        path = write_lines(
            tmp_path / "roster.csv", ROSTER_HEADER,
            "P1,M,1950-06-30,1985-03-01,MAT/01,MAT,public",
            "P2,M,1950-06-30,1985-03-01,MAT/01,BIO,public")
        with pytest.raises(IngestError, match="listed under uda"):
            ingest_roster(path)

    def test_one_sided_active_span_rejected(self, tmp_path):
        path = write_lines(
            tmp_path / "roster.csv", ROSTER_HEADER + ",active_start,active_end",
            "P1,M,1950-06-30,1985-03-01,MAT/01,MAT,public,2008-01-01,")
        with pytest.raises(IngestError, match="together"):
            ingest_roster(path)

    def test_reversed_active_span_rejected(self, tmp_path):
        path = write_lines(
            tmp_path / "roster.csv", ROSTER_HEADER + ",active_start,active_end",
            "P1,M,1950-06-30,1985-03-01,MAT/01,MAT,public,2010-01-01,2008-01-01")
        with pytest.raises(IngestError, match="active_start after active_end"):
            ingest_roster(path)

    def test_empty_roster_warns(self, tmp_path, caplog):
        path = write_lines(tmp_path / "roster.csv", ROSTER_HEADER)
        with caplog.at_level(logging.WARNING):
            assert ingest_roster(path) == []
        assert "empty roster" in caplog.text


class TestPublicationIngest:
    def test_csv_happy_path(self, tmp_path):
        path = write_lines(
            tmp_path / "pubs.csv", PUBS_HEADER,
            "W1,2008,MAT/01,1.5,4,article,P1@U1;X1@U2",
            "W2,2009,MAT/01,,0,article,P1@U1")
        corpus = ingest_publications(path)
        assert len(corpus) == 2
        assert corpus.publications[0].byline == (Authorship("P1", "U1"),
                                                 Authorship("X1", "U2"))
        assert corpus.publications[1].journal_if is None
        assert corpus.dropped == 0

    def test_jsonl_matches_csv(self, tmp_path):
        csv_path = write_lines(
            tmp_path / "pubs.csv", PUBS_HEADER,
            "W1,2008,MAT/01,1.5,4,article,P1@U1;X1@U2",
            "W2,2009,BIO/05,2.25,0,review,P2@U3")
        jsonl_path = tmp_path / "pubs.jsonl"
        jsonl_path.write_text(
            '{"id": "W1", "year": 2008, "subject_category": "MAT/01", '
            '"journal_if": 1.5, "citations": 4, "doc_type": "article", '
            '"byline": ["P1@U1", "X1@U2"]}\n'
            '{"id": "W2", "year": 2009, "subject_category": "BIO/05", '
            '"journal_if": 2.25, "citations": 0, "doc_type": "review", '
            '"byline": "P2@U3"}\n')
        assert (ingest_publications(jsonl_path).publications
                == ingest_publications(csv_path).publications)

    def test_excluded_doc_types_counted(self, tmp_path):
        path = write_lines(
            tmp_path / "pubs.csv", PUBS_HEADER,
            "W1,2008,MAT/01,1.5,4,article,P1@U1",
            "W2,2008,MAT/01,1.5,4,Editorial Material,P1@U1",
            "W3,2008,MAT/01,1.5,4,reply,nonsense-byline")
        corpus = ingest_publications(path)
        # dropped rows are never validated, so the bad byline on W3 is moot
        assert len(corpus) == 1 and corpus.dropped == 2

    def test_custom_exclusion_list(self, tmp_path):
        path = write_lines(
            tmp_path / "pubs.csv", PUBS_HEADER,
            "W1,2008,MAT/01,1.5,4,article,P1@U1",
            "W2,2008,MAT/01,1.5,4,review,P1@U1")
        corpus = ingest_publications(path, excluded_doc_types=("review",))
        assert len(corpus) == 1 and corpus.dropped == 1

    @pytest.mark.parametrize("row,needle", [
        ("W1,20x8,MAT/01,1.5,4,article,P1@U1", "unparseable year"),
        ("W1,2008,MAT/01,-1.5,4,article,P1@U1", "negative journal_if"),
        ("W1,2008,MAT/01,1.5,-4,article,P1@U1", "negative citations"),
        ("W1,2008,MAT/01,1.5,4,article,", "empty byline"),
        ("W1,2008,MAT/01,1.5,4,article,P1-U1", "malformed byline token"),
        ("W1,2008,,1.5,4,article,P1@U1", "empty subject_category"),
        (",2008,MAT/01,1.5,4,article,P1@U1", "empty publication id"),
    ])
    def test_bad_rows_rejected(self, tmp_path, row, needle):
        path = write_lines(tmp_path / "pubs.csv", PUBS_HEADER, row)
        with pytest.raises(IngestError, match=needle):
            ingest_publications(path)

    def test_duplicate_publication_id(self, tmp_path):
        path = write_lines(
            tmp_path / "pubs.csv", PUBS_HEADER,
            "W1,2008,MAT/01,1.5,4,article,P1@U1",
            "W1,2009,MAT/01,1.5,4,article,P1@U1")
        with pytest.raises(IngestError, match="duplicate publication id"):
            ingest_publications(path)

    def test_strict_rejects_unknown_authors(self, tmp_path):
        path = write_lines(
            tmp_path / "pubs.csv", PUBS_HEADER,
            "W1,2008,MAT/01,1.5,4,article,P1@U1;X9@U2")
        with pytest.raises(IngestError, match="unknown author"):
            ingest_publications(path, roster_ids={"P1"}, strict=True)
        # lenient mode keeps the row
        assert len(ingest_publications(path, roster_ids={"P1"})) == 1

    def test_empty_file_warns(self, tmp_path, caplog):
        path = write_lines(tmp_path / "pubs.csv", PUBS_HEADER)
        with caplog.at_level(logging.WARNING):
            corpus = ingest_publications(path)
        assert len(corpus) == 0
        assert "empty publication file" in caplog.text

    def test_round_trip(self, tmp_path):
        pubs = [make_publication("W1", byline=(("P1", "U1"), ("X1", "U2"))),
                make_publication("W2", journal_if=None, citations=0)]
        path = tmp_path / "pubs.csv"
        write_publications(path, pubs)
        assert ingest_publications(path).publications == tuple(pubs)

    def test_invalid_json_line_reported(self, tmp_path):
        path = tmp_path / "pubs.jsonl"
        path.write_text('{"id": "W1"\n')
        with pytest.raises(IngestError, match="invalid JSON"):
            ingest_publications(path)


class TestCorpusIndex:
    def test_authored_by_positions_and_window(self, tiny_world):
        _, corpus = tiny_world
        hits = corpus.authored_by("P3", (2006, 2010))
        assert [(pub.id, pos) for pub, pos in hits] == [
            ("W06", 0), ("W07", 1), ("W08", 0), ("W11", 0)]
        # no window includes the 2005 publication
        assert len(corpus.authored_by("P3")) == 5
        assert corpus.authored_by("NOBODY") == []


class TestSdsMap:
    def test_load(self, tmp_path):
        path = write_lines(tmp_path / "map.csv", "sds,uda", "MAT/01,MAT", "BIO/05,BIO")
        assert load_sds_map(path) == {"MAT/01": "MAT", "BIO/05": "BIO"}

    def test_conflicting_mapping_rejected(self, tmp_path):
        path = write_lines(tmp_path / "map.csv", "sds,uda", "MAT/01,MAT", "MAT/01,BIO")
        with pytest.raises(IngestError, match="two udas"):
            load_sds_map(path)


class TestYearArithmetic:
    def test_whole_years_anniversary(self):
        birth = date(1950, 6, 30)
        assert whole_years(birth, date(2010, 6, 29)) == 59
        assert whole_years(birth, date(2010, 6, 30)) == 60
        assert whole_years(birth, date(2010, 12, 31)) == 60

    def test_exact_years_is_day_count_scaled(self):
        start, end = date(1950, 6, 30), date(2010, 12, 31)
        assert exact_years(start, end) == (end - start).days / DAYS_PER_YEAR

    def test_working_years_defaults_to_window_length(self):
        assert working_years(None, (2006, 2010)) == 5.0
        assert working_years(None, (2008, 2008)) == 1.0

    def test_working_years_half_leap_year(self):
        # day 184 of the 366-day 2008 leaves exactly 183 covered days
        span = (date(2008, 7, 2), date(2010, 12, 31))
        assert working_years(span, (2006, 2010)) == 2.5

    def test_working_years_partial_overlap(self):
        span = (date(2005, 1, 1), date(2006, 12, 31))
        assert working_years(span, (2006, 2010)) == 1.0
        assert working_years((date(2011, 1, 1), date(2012, 1, 1)), (2006, 2010)) == 0.0

    def test_working_years_rejects_reversed_window(self):
        with pytest.raises(ValueError, match="invalid window"):
            working_years(None, (2010, 2006))

    @given(start_off=st.integers(min_value=0, max_value=3000),
           length=st.integers(min_value=0, max_value=3000))
    @settings(deadline=None, max_examples=200)
    def test_working_years_bounded_by_window(self, start_off, length):
        a = date(2004, 1, 1).toordinal() + start_off
        span = (date.fromordinal(a), date.fromordinal(a + length))
        t = working_years(span, (2006, 2010))
        assert 0.0 <= t <= 5.0


class TestDeriveCovariates:
    CENSUS = date(2010, 12, 31)
    WINDOW = (2006, 2010)

    def test_reference_professor(self):
        prof = make_professor(birth=date(1950, 6, 30), appointed=date(2003, 1, 1))
        cov = derive_covariates(prof, self.CENSUS, self.WINDOW)
        assert cov.age_years == 60
        assert cov.seniority_years == 7
        assert cov.age == exact_years(date(1950, 6, 30), self.CENSUS)
        assert cov.seniority == exact_years(date(2003, 1, 1), self.CENSUS)
        assert cov.seniority < 8.0 and cov.recently_promoted
        assert cov.t == 5.0
        assert cov.gender_dummy == 1

    def test_recent_promotion_boundary(self):
        # appointed 2922 days before the census: 2922 / 365.2425 > 8
        prof = make_professor(appointed=date(2002, 12, 31))
        cov = derive_covariates(prof, self.CENSUS, self.WINDOW)
        assert cov.seniority_years == 8
        assert cov.seniority > 8.0
        assert not cov.recently_promoted

    def test_university_type_dummies(self):
        for utype, expected in [("public", (0, 0, 0)), ("private", (1, 0, 0)),
                                ("advanced_school", (0, 1, 0)),
                                ("polytechnic", (0, 0, 1))]:
            cov = derive_covariates(make_professor(university_type=utype),
                                    self.CENSUS, self.WINDOW)
            assert (cov.u1, cov.u2, cov.u3) == expected

    def test_gender_dummy(self):
        cov = derive_covariates(make_professor(gender="female"),
                                self.CENSUS, self.WINDOW)
        assert cov.gender_dummy == 0

    def test_partial_span_t(self):
        prof = make_professor(span=(date(2008, 7, 2), date(2010, 12, 31)))
        assert derive_covariates(prof, self.CENSUS, self.WINDOW).t == 2.5

    def test_census_before_birth_rejected(self):
        prof = make_professor(birth=date(1950, 6, 30))
        with pytest.raises(ValueError, match="before birth"):
            derive_covariates(prof, date(1950, 6, 30), self.WINDOW)

    def test_census_before_appointment_rejected(self):
        prof = make_professor(appointed=date(2011, 3, 1))
        with pytest.raises(ValueError, match="before appointment"):
            derive_covariates(prof, self.CENSUS, self.WINDOW)

    def test_span_outside_window_rejected(self):
        prof = make_professor(span=(date(2011, 1, 1), date(2012, 1, 1)))
        with pytest.raises(ValueError, match="no working years"):
            derive_covariates(prof, date(2012, 6, 1), self.WINDOW)

    @given(birth_off=st.integers(min_value=0, max_value=8000),
           wait_days=st.integers(min_value=7305, max_value=20000))
    @settings(deadline=None, max_examples=150)
    def test_seniority_never_exceeds_age(self, birth_off, wait_days):
        birth = date.fromordinal(date(1930, 1, 1).toordinal() + birth_off)
        appointed = date.fromordinal(birth.toordinal() + wait_days)
        prof = make_professor(birth=birth, appointed=appointed)
        cov = derive_covariates(prof, date(2010, 12, 31), (2006, 2010))
        assert cov.seniority < cov.age
        assert cov.seniority_years <= cov.age_years
        assert not math.isnan(cov.age)
