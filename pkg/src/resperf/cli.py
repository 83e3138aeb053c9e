"""Command-line pipeline driver.

Subcommands: ``compute`` (indicators + percentiles from roster and corpus),
``regress`` (per-discipline fractional-logit fits on compute output),
``simulate`` (synthetic cohort generation + sign-recovery experiment), and
``report`` (descriptive tables and distributions).

Exit codes: 0 success, 1 computation failure, 2 input or validation failure.
Every run writes a ``manifest.json`` with the resolved configuration next to
its outputs; reruns on identical inputs are byte-identical.
"""

from __future__ import annotations

import csv
import json
import logging
import sys
from dataclasses import replace
from datetime import date
from pathlib import Path

import click

from .corpus import (DEFAULT_EXCLUDED_DOC_TYPES, IngestError,
                     derive_covariates, ingest_publications, ingest_roster,
                     load_sds_map, write_publications, write_roster)
from .credit import (CONVENTIONS, ConventionMap, CreditError,
                     load_convention_map, write_convention_map)
from .indicators import INDICATORS, IndicatorScores
from .pipeline import run_scoring
from .regress import (FitError, FitResult, ModelSpec, RegressionRow,
                      fit_with_selected_degree)
from .report import (descriptive_table, distribution_histogram,
                     group_coefficient_of_variation, histogram_csv,
                     regression_table)
from .sim import SimConfig, generate_cohort, recovery_experiment

logger = logging.getLogger(__name__)


def _parse_window(text: str) -> tuple[int, int]:
    for sep in (":", "-"):
        if sep in text:
            left, _, right = text.partition(sep)
            try:
                window = (int(left), int(right))
            except ValueError:
                break
            if window[0] > window[1]:
                raise click.UsageError(f"window start after end: {text!r}")
            return window
    raise click.UsageError(f"window must look like 2006:2010, got {text!r}")


def _parse_census(text: str | None, window: tuple[int, int]) -> date:
    if text is None:
        return date(window[1], 12, 31)
    try:
        return date.fromisoformat(text)
    except ValueError:
        raise click.UsageError(f"census date must be ISO formatted, got {text!r}")


def _require_paths(*paths) -> None:
    for p in paths:
        if p is not None and not Path(p).exists():
            raise click.UsageError(f"input path does not exist: {p}")


def _input_stage(label: str, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except (IngestError, CreditError, ValueError, OSError) as exc:
        raise click.UsageError(f"{label}: {exc}") from exc


def _compute_stage(label: str, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except Exception as exc:
        raise click.ClickException(f"{label}: {exc}") from exc


def _out_dir(path) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_manifest(out: Path, command: str, inputs: dict, params: dict,
                    outputs: list[str]) -> None:
    manifest = {"command": command, "inputs": inputs, "parameters": params,
                "outputs": sorted(outputs)}
    (out / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _fmt_opt(value: float | None) -> str:
    return "" if value is None else repr(float(value))


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="Debug-level logging.")
def main(verbose: bool) -> None:
    """Research performance measurement pipeline."""
    logging.basicConfig(stream=sys.stderr,
                        level=logging.DEBUG if verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")


@main.command()
@click.option("--roster", "roster_path", required=True, help="Roster CSV.")
@click.option("--pubs", "pubs_path", required=True,
              help="Publication corpus (CSV or JSON-lines).")
@click.option("--window", default="2006:2010", show_default=True,
              help="Observation years, START:END inclusive.")
@click.option("--census-date", default=None,
              help="Covariate census date (ISO); default is the window's last day.")
@click.option("--conventions", "conventions_path", default=None,
              help="CSV (sds, convention) overriding credit conventions per field.")
@click.option("--force-convention", type=click.Choice(CONVENTIONS), default=None,
              help="Apply one credit convention to every field.")
@click.option("--sds-map", "sds_map_path", default=None,
              help="CSV (sds, uda) used to validate roster field codes.")
@click.option("--exclude-doc-type", "excluded_doc_types", multiple=True,
              help="Document types to drop at ingest (repeatable); "
                   "defaults to editorial material, conference abstracts, replies.")
@click.option("--strict", is_flag=True,
              help="Fail on unknown byline authors and missing scaling cells.")
@click.option("--threads", type=click.IntRange(min=1), default=1, show_default=True,
              help="Worker thread cap; output does not depend on it.")
@click.option("--out", "out_path", required=True, help="Output directory.")
def compute(roster_path, pubs_path, window, census_date, conventions_path,
            force_convention, sds_map_path, excluded_doc_types, strict,
            threads, out_path) -> None:
    """Score every rostered professor and percentile-scale the cohorts."""
    _require_paths(roster_path, pubs_path, conventions_path, sds_map_path)
    window_years = _parse_window(window)
    census = _parse_census(census_date, window_years)

    sds_map = _input_stage("sds map", load_sds_map, sds_map_path) \
        if sds_map_path else None
    roster = _input_stage("roster ingest", ingest_roster, roster_path, sds_map)
    excluded = tuple(excluded_doc_types) or DEFAULT_EXCLUDED_DOC_TYPES
    corpus = _input_stage(
        "publication ingest", ingest_publications, pubs_path, excluded,
        roster_ids={p.id for p in roster} if strict else None, strict=strict)
    if conventions_path:
        conventions = _input_stage("convention map", load_convention_map,
                                   conventions_path, force_convention)
    else:
        conventions = ConventionMap(global_override=force_convention)

    covariates, scores, percentiles, _ = _compute_stage(
        "scoring", run_scoring, roster, corpus, conventions, census,
        window_years, strict, threads)

    out = _out_dir(out_path)
    with (out / "indicators.csv").open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["professor_id", "sds", "fss", "p", "ia", "ij",
                         "n_pubs", "inactive_flag"])
        for prof in roster:
            s = scores[prof.id]
            writer.writerow([prof.id, prof.sds, repr(s.fss), repr(s.p),
                             _fmt_opt(s.ia), _fmt_opt(s.ij), s.n_pubs,
                             int(s.inactive)])
    with (out / "percentiles.csv").open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["professor_id", "indicator", "percentile"])
        for prof in roster:
            for indicator in INDICATORS:
                if indicator in percentiles[prof.id]:
                    writer.writerow([prof.id, indicator,
                                     repr(percentiles[prof.id][indicator])])
    with (out / "covariates.csv").open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["professor_id", "uda", "sds", "age", "seniority",
                         "age_years", "seniority_years", "gender_dummy",
                         "u1", "u2", "u3", "t", "recently_promoted"])
        for prof in roster:
            c = covariates[prof.id]
            writer.writerow([prof.id, prof.uda, prof.sds, repr(c.age),
                             repr(c.seniority), c.age_years, c.seniority_years,
                             c.gender_dummy, c.u1, c.u2, c.u3, repr(c.t),
                             int(c.recently_promoted)])

    click.echo(f"scored {len(roster)} professors over {len(corpus)} publications "
               f"({corpus.dropped} dropped by document type)")
    _write_manifest(out, "compute",
                    inputs={"roster": str(roster_path), "pubs": str(pubs_path),
                            "conventions": conventions_path and str(conventions_path),
                            "sds_map": sds_map_path and str(sds_map_path)},
                    params={"window": list(window_years),
                            "census_date": census.isoformat(),
                            "strict": strict, "threads": threads,
                            "force_convention": force_convention,
                            "excluded_doc_types": sorted(excluded)},
                    outputs=["indicators.csv", "percentiles.csv",
                             "covariates.csv", "manifest.json"])


def _read_covariates(path: Path) -> list[dict]:
    rows = []
    with path.open(newline="", encoding="utf-8") as fh:
        for rec in csv.DictReader(fh):
            rows.append(rec)
    return rows


def _read_percentiles(path: Path) -> dict[str, dict[str, float]]:
    out: dict[str, dict[str, float]] = {}
    with path.open(newline="", encoding="utf-8") as fh:
        for rec in csv.DictReader(fh):
            out.setdefault(rec["professor_id"], {})[rec["indicator"]] = \
                float(rec["percentile"])
    return out


@main.command()
@click.option("--data", "data_path", required=True,
              help="Directory holding compute output (covariates.csv, percentiles.csv).")
@click.option("--dependent", type=click.Choice(INDICATORS), default="FSS",
              show_default=True, help="Indicator whose percentile is modeled.")
@click.option("--max-degree", type=click.IntRange(1, 3), default=3, show_default=True,
              help="Highest age polynomial degree offered to AIC selection.")
@click.option("--max-seniority", type=float, default=None,
              help="Keep only professors with seniority strictly below this.")
@click.option("--spec", "spec_path", default=None,
              help="JSON model spec (dependent, age_degree, covariates, max_seniority); "
                   "flags override its entries.")
@click.option("--total-only", is_flag=True, help="Skip the per-discipline fits.")
@click.option("--allow-partial", is_flag=True,
              help="Keep going when a group's fit fails or does not converge.")
@click.option("--fmt", type=click.Choice(["text", "csv"]), default="text",
              show_default=True)
@click.option("--out", "out_path", required=True, help="Output directory.")
def regress(data_path, dependent, max_degree, max_seniority, spec_path,
            total_only, allow_partial, fmt, out_path) -> None:
    """Fit fractional-logit performance models per discipline and in total."""
    data = Path(data_path)
    cov_path, pct_path = data / "covariates.csv", data / "percentiles.csv"
    _require_paths(data, cov_path, pct_path, spec_path)

    spec_data: dict = {}
    if spec_path:
        spec_data = _input_stage("model spec", lambda p: json.loads(
            Path(p).read_text(encoding="utf-8")), spec_path)
    ctx = click.get_current_context()
    if ctx.get_parameter_source("dependent").name != "DEFAULT" or "dependent" not in spec_data:
        spec_data["dependent"] = dependent
    if max_seniority is not None:
        spec_data["max_seniority"] = max_seniority
    spec_data.pop("age_degree", None)  # degree comes from AIC selection
    spec = _input_stage("model spec", ModelSpec.from_mapping, spec_data)

    cov_rows = _input_stage("covariates", _read_covariates, cov_path)
    percentiles = _input_stage("percentiles", _read_percentiles, pct_path)
    rows = []
    for rec in cov_rows:
        rows.append(RegressionRow(
            professor_id=rec["professor_id"],
            uda=rec["uda"],
            age=float(rec["age"]),
            seniority=float(rec["seniority"]),
            gender=int(rec["gender_dummy"]),
            u1=int(rec["u1"]), u2=int(rec["u2"]), u3=int(rec["u3"]),
            percentiles=percentiles.get(rec["professor_id"], {}),
        ))

    groups: list[tuple[str, list[RegressionRow]]] = [("Total", rows)]
    if not total_only:
        by_uda: dict[str, list[RegressionRow]] = {}
        for row in rows:
            by_uda.setdefault(row.uda, []).append(row)
        groups.extend(sorted(by_uda.items()))

    fits: dict[str, FitResult] = {}
    failures: list[str] = []
    for name, members in groups:
        try:
            fit = fit_with_selected_degree(members, spec, max_degree=max_degree)
        except FitError as exc:
            failures.append(f"{name}: {exc}")
            continue
        if not fit.converged:
            failures.append(f"{name}: did not converge")
            continue
        fits[name] = fit
    if failures and not allow_partial:
        raise click.ClickException(
            "regression: " + "; ".join(failures) + " (use --allow-partial to keep going)")
    for failure in failures:
        logger.warning("skipped group %s", failure)
    if not fits:
        raise click.ClickException("regression: no group could be fitted")

    out = _out_dir(out_path)
    table = regression_table(fits, fmt=fmt)
    table_name = f"regression_table.{'txt' if fmt == 'text' else 'csv'}"
    (out / table_name).write_text(table, encoding="utf-8")
    fits_payload = []
    for name, fit in fits.items():
        fits_payload.append({
            "group": name,
            "dependent": fit.dependent,
            "age_degree": fit.age_degree,
            "age_mean": fit.age_mean,
            "n": fit.n,
            "aic": fit.aic,
            "qll": fit.qll,
            "pseudo_r2": fit.pseudo_r2,
            "converged": fit.converged,
            "dropped_terms": list(fit.dropped_terms),
            "vifs": fit.vifs,
            "n_iter": fit.n_iter,
            "terms": [{
                "term": term,
                "coefficient": fit.coefficients[term],
                "robust_se": fit.robust_se[term],
                "classical_se": fit.classical_se[term],
                "ame": fit.ame.get(term),
            } for term in fit.terms],
        })
    (out / "fits.json").write_text(
        json.dumps(fits_payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")

    click.echo(f"fitted {len(fits)} group(s); {len(failures)} skipped")
    _write_manifest(out, "regress",
                    inputs={"data": str(data_path), "spec": spec_path and str(spec_path)},
                    params={"dependent": spec.dependent, "max_degree": max_degree,
                            "max_seniority": max_seniority,
                            "total_only": total_only,
                            "allow_partial": allow_partial, "fmt": fmt},
                    outputs=[table_name, "fits.json", "manifest.json"])


@main.command()
@click.option("--config", "config_path", default=None,
              help="JSON simulation config; defaults are a realistic cohort.")
@click.option("--runs", type=click.IntRange(min=1), default=1, show_default=True,
              help="Sign-recovery repetitions (seed advances by 1 per run).")
@click.option("--seed", type=int, default=None, help="Override the config seed.")
@click.option("--n-professors", type=int, default=None,
              help="Override the config cohort size.")
@click.option("--dependent", type=click.Choice(INDICATORS), default="FSS",
              show_default=True)
@click.option("--max-degree", type=click.IntRange(1, 3), default=1, show_default=True,
              help="Age degree offered to AIC selection inside each run.")
@click.option("--out", "out_path", required=True, help="Output directory.")
def simulate(config_path, runs, seed, n_professors, dependent, max_degree,
             out_path) -> None:
    """Generate a synthetic cohort and measure ground-truth sign recovery."""
    _require_paths(config_path)
    config = _input_stage("sim config", SimConfig.from_file, config_path) \
        if config_path else SimConfig()
    overrides = {}
    if seed is not None:
        overrides["seed"] = seed
    if n_professors is not None:
        overrides["n_professors"] = n_professors
    if overrides:
        config = _input_stage("sim config", replace, config, **overrides)

    roster, corpus = _compute_stage("generation", generate_cohort, config)
    out = _out_dir(out_path)
    write_roster(out / "roster.csv", roster)
    write_publications(out / "publications.csv", corpus)
    write_convention_map(out / "conventions.csv",
                         {f.sds: f.convention for f in config.fields})

    rep = _compute_stage("recovery", recovery_experiment, config, runs,
                         max_degree, dependent)
    (out / "recovery.json").write_text(
        json.dumps(rep.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    with (out / "recovery_runs.csv").open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["run", "seed", "n", "n_terms", "age_ame", "seniority_ame",
                         "pseudo_r2", "aic", "age_degree", "converged", "error"])
        for r in rep.runs:
            writer.writerow([r.run, r.seed, r.n, r.n_terms, _fmt_opt(r.age_ame),
                             _fmt_opt(r.seniority_ame), _fmt_opt(r.pseudo_r2),
                             _fmt_opt(r.aic), "" if r.age_degree is None else r.age_degree,
                             int(r.converged), r.error or ""])

    frac_age = rep.age_negative_fraction
    frac_sen = rep.seniority_positive_fraction
    click.echo(f"{len(roster)} professors, {len(corpus)} publications; "
               f"{runs} run(s), {rep.n_failed} failed; "
               f"age AME negative in {'-' if frac_age is None else f'{frac_age:.0%}'}, "
               f"seniority AME positive in {'-' if frac_sen is None else f'{frac_sen:.0%}'}")
    _write_manifest(out, "simulate",
                    inputs={"config": config_path and str(config_path)},
                    params={"runs": runs, "seed": config.seed,
                            "n_professors": config.n_professors,
                            "dependent": dependent, "max_degree": max_degree},
                    outputs=["roster.csv", "publications.csv", "conventions.csv",
                             "recovery.json", "recovery_runs.csv", "manifest.json"])


def _read_indicators(path: Path) -> dict[str, IndicatorScores]:
    out = {}
    with path.open(newline="", encoding="utf-8") as fh:
        for rec in csv.DictReader(fh):
            out[rec["professor_id"]] = IndicatorScores(
                fss=float(rec["fss"]), p=float(rec["p"]),
                ia=float(rec["ia"]) if rec["ia"] else None,
                ij=float(rec["ij"]) if rec["ij"] else None,
                n_pubs=int(rec["n_pubs"]))
    return out


@main.command("report")
@click.option("--roster", "roster_path", required=True, help="Roster CSV.")
@click.option("--indicators", "indicators_path", required=True,
              help="indicators.csv from a compute run.")
@click.option("--window", default="2006:2010", show_default=True)
@click.option("--census-date", default=None)
@click.option("--totals", "totals_path", default=None,
              help="JSON mapping uda -> population headcount for coverage shares.")
@click.option("--age-bin-width", type=float, default=5.0, show_default=True)
@click.option("--fmt", type=click.Choice(["text", "csv"]), default="text",
              show_default=True)
@click.option("--out", "out_path", required=True, help="Output directory.")
def report_cmd(roster_path, indicators_path, window, census_date, totals_path,
               age_bin_width, fmt, out_path) -> None:
    """Descriptive tables, age distributions, and indicator dispersion."""
    _require_paths(roster_path, indicators_path, totals_path)
    window_years = _parse_window(window)
    census = _parse_census(census_date, window_years)
    roster = _input_stage("roster ingest", ingest_roster, roster_path)
    scores = _input_stage("indicators", _read_indicators, Path(indicators_path))
    totals = None
    if totals_path:
        totals = _input_stage("totals", lambda p: {
            str(k): int(v) for k, v in
            json.loads(Path(p).read_text(encoding="utf-8")).items()}, totals_path)

    covariates = _compute_stage(
        "covariates", lambda: {p.id: derive_covariates(p, census, window_years)
                               for p in roster})
    missing = [p.id for p in roster if p.id not in scores]
    if missing:
        raise click.UsageError(
            f"indicators: no scores for professor(s) {', '.join(missing[:5])}")

    out = _out_dir(out_path)
    tables = _compute_stage("descriptives", descriptive_table, roster, covariates,
                            scores, totals, fmt)
    desc_name = f"descriptives.{'txt' if fmt == 'text' else 'csv'}"
    (out / desc_name).write_text(tables, encoding="utf-8")

    ages = [covariates[p.id].age for p in roster]
    app_ages = [covariates[p.id].age - covariates[p.id].seniority for p in roster]
    (out / "age_histogram.csv").write_text(
        histogram_csv(distribution_histogram(ages, age_bin_width)), encoding="utf-8")
    (out / "appointment_age_histogram.csv").write_text(
        histogram_csv(distribution_histogram(app_ages, age_bin_width)),
        encoding="utf-8")

    fss_by_sds: dict[str, list[float]] = {}
    for prof in roster:
        fss_by_sds.setdefault(prof.sds, []).append(scores[prof.id].fss)
    cvs = group_coefficient_of_variation(fss_by_sds)
    with (out / "fss_cv_by_sds.csv").open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["sds", "coefficient_of_variation"])
        for sds, cv in cvs.items():
            writer.writerow([sds, repr(cv)])

    click.echo(f"reported on {len(roster)} professors across "
               f"{len({p.uda for p in roster})} discipline(s)")
    _write_manifest(out, "report",
                    inputs={"roster": str(roster_path),
                            "indicators": str(indicators_path),
                            "totals": totals_path and str(totals_path)},
                    params={"window": list(window_years),
                            "census_date": census.isoformat(),
                            "age_bin_width": age_bin_width, "fmt": fmt},
                    outputs=[desc_name, "age_histogram.csv",
                             "appointment_age_histogram.csv", "fss_cv_by_sds.csv",
                             "manifest.json"])


if __name__ == "__main__":
    main()
