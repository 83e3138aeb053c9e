"""Synthetic cohort generation with known ground-truth effects.

A cohort of professors is drawn with a realistic age pyramid (about half a
percent under 41, a third over 65, 13 percent over 70), seniority coupled to
age through a Beta-thinned share of the post-26 career (the thinning
concentration is solved analytically from the requested age-seniority
correlation), and a latent yearly publication rate

    lambda_i = exp(b0 + b_age*age_i + b_sen*seniority_i + b_gender*male_i).

Publication counts are Poisson(lambda_i * t); citations are overdispersed
through a Poisson-gamma mixture per (year, category) cell; bylines carry the
focal professor at a random position among synthetic co-authors so the
position-weighted credit rules bite.  Everything is driven by one seeded
generator: the same config yields byte-identical rosters and corpora.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from datetime import date, timedelta

import numpy as np

from .corpus import DAYS_PER_YEAR, Authorship, Corpus, Professor, Publication
from .credit import ALPHABETICAL, CONVENTIONS, POSITION_WEIGHTED, ConventionMap
from .pipeline import run_scoring
from .regress import ModelSpec, fit_model, fit_with_selected_degree

# (low, high, share): completed-years age runs from a census-date pyramid
# (about 0.5% under 41, under 12% below 51, a third over 65, 13% over 70).
AGE_BRACKETS = (
    (36, 40, 0.005),
    (41, 50, 0.110),
    (51, 55, 0.155),
    (56, 60, 0.200),
    (61, 64, 0.195),
    (65, 69, 0.205),
    (70, 75, 0.130),
)

MIN_CAREER_START_AGE = 26.0

UNIVERSITY_POOLS = (("public", "PUB", 10), ("private", "PRI", 3),
                    ("polytechnic", "POL", 3), ("advanced_school", "ADV", 2))

# Mean byline length by credit convention of the professor's field.
BYLINE_MEAN = {POSITION_WEIGHTED: 5.0, ALPHABETICAL: 3.0}
SAME_UNIVERSITY_SHARE = 0.45
EXTERNAL_UNIVERSITIES = 12


@dataclass(frozen=True)
class FieldSpec:
    sds: str
    uda: str
    convention: str


DEFAULT_FIELDS = (
    FieldSpec("MED/01", "MED", POSITION_WEIGHTED),
    FieldSpec("BIO/01", "BIO", POSITION_WEIGHTED),
    FieldSpec("AGR/01", "AVS", POSITION_WEIGHTED),
    FieldSpec("MAT/01", "MAT", ALPHABETICAL),
    FieldSpec("FIS/01", "PHY", ALPHABETICAL),
    FieldSpec("ING-IND/01", "IIE", ALPHABETICAL),
)


@dataclass(frozen=True)
class SimConfig:
    n_professors: int = 2000
    fields: tuple[FieldSpec, ...] = DEFAULT_FIELDS
    true_age_effect: float = -0.02
    true_seniority_effect: float = 0.015
    true_gender_effect: float = 0.10
    base_log_rate: float = 1.05
    age_seniority_corr_target: float = 0.7
    citation_dispersion: float = 1.0
    # Variance of the mean-1 multiplicative noise on individual rates;
    # 0 disables it.  Drives the inactive share and keeps fits honest.
    latent_heterogeneity: float = 0.7
    window: tuple[int, int] = (2006, 2010)
    seed: int = 20060101
    gender_male_share: float = 0.8
    mean_appointment_age: float = 45.8
    university_type_shares: tuple[float, float, float, float] = (0.90, 0.04, 0.04, 0.02)

    def __post_init__(self):
        if self.n_professors < 0:
            raise ValueError("n_professors must be nonnegative")
        if not self.fields:
            raise ValueError("at least one field is required")
        for f in self.fields:
            if f.convention not in CONVENTIONS:
                raise ValueError(f"field {f.sds}: unknown convention {f.convention!r}")
        if not -1.0 < self.age_seniority_corr_target < 1.0:
            raise ValueError("age-seniority correlation target must lie in (-1, 1)")
        if self.citation_dispersion <= 0:
            raise ValueError("citation_dispersion must be positive")
        if self.latent_heterogeneity < 0:
            raise ValueError("latent_heterogeneity must be nonnegative")
        if self.window[0] > self.window[1]:
            raise ValueError(f"invalid window {self.window}")
        if not 0.0 <= self.gender_male_share <= 1.0:
            raise ValueError("gender_male_share must lie in [0, 1]")
        if len(self.university_type_shares) != 4 or any(
                s < 0 for s in self.university_type_shares):
            raise ValueError("university_type_shares needs 4 nonnegative entries")
        if abs(sum(self.university_type_shares) - 1.0) > 1e-9:
            raise ValueError("university_type_shares must sum to 1")
        if self.mean_appointment_age <= MIN_CAREER_START_AGE:
            raise ValueError(
                f"mean_appointment_age must exceed {MIN_CAREER_START_AGE}")

    @classmethod
    def from_file(cls, path) -> "SimConfig":
        import json
        from pathlib import Path
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        if "fields" in data:
            parsed = []
            for item in data["fields"]:
                if isinstance(item, dict):
                    parsed.append(FieldSpec(item["sds"], item["uda"], item["convention"]))
                else:
                    parsed.append(FieldSpec(*item))
            data["fields"] = tuple(parsed)
        if "window" in data:
            data["window"] = tuple(int(v) for v in data["window"])
        if "university_type_shares" in data:
            data["university_type_shares"] = tuple(data["university_type_shares"])
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown sim config keys: {', '.join(sorted(unknown))}")
        return cls(**data)

    def conventions(self) -> ConventionMap:
        return ConventionMap(overrides={f.sds: f.convention for f in self.fields})


def _sample_ages(rng: np.random.Generator, n: int) -> np.ndarray:
    lows = np.array([b[0] for b in AGE_BRACKETS])
    highs = np.array([b[1] for b in AGE_BRACKETS])
    shares = np.array([b[2] for b in AGE_BRACKETS])
    shares = shares / shares.sum()
    idx = rng.choice(len(AGE_BRACKETS), size=n, p=shares)
    whole = rng.integers(lows[idx], highs[idx] + 1)
    return whole + rng.random(n)


def _seniority_share_params(ages: np.ndarray, corr_target: float,
                            mean_appointment_age: float) -> tuple[float, float]:
    """Beta(mu, s) parameters for the career share spent as full professor.

    seniority = (age - 26) * B with B ~ Beta.  mu follows from the mean
    appointment age; the concentration s is solved so corr(age, seniority)
    hits the target given the sample age moments.  Raises ValueError when the
    target is not achievable with these marginals.
    """
    career = ages - MIN_CAREER_START_AGE
    m_a = float(career.mean())
    var_a = float(career.var())
    if var_a <= 0:
        raise ValueError("degenerate age distribution; correlation target unreachable")
    mu = 1.0 - (mean_appointment_age - MIN_CAREER_START_AGE) / m_a
    if not 0.0 < mu < 1.0:
        raise ValueError(
            f"mean appointment age {mean_appointment_age} incompatible with "
            f"mean career length {m_a + MIN_CAREER_START_AGE:.1f}")
    rho = corr_target
    if rho <= 0.0:
        raise ValueError(
            "infeasible correlation target: seniority grows with age under this "
            "generator, so the target must be positive")
    var_b = mu * mu * var_a * (1.0 - rho * rho) / (rho * rho * (var_a + m_a * m_a))
    if var_b >= mu * (1.0 - mu):
        rho_min = math.sqrt(mu * var_a / ((1.0 - mu) * (var_a + m_a * m_a)))
        raise ValueError(
            f"infeasible correlation target {rho:.3f}: these marginals support "
            f"targets above {rho_min:.3f} only")
    s = mu * (1.0 - mu) / var_b - 1.0
    return mu, min(s, 1e7)


def generate_cohort(config: SimConfig) -> tuple[list[Professor], Corpus]:
    """Draw a roster and matching publication corpus."""
    n = config.n_professors
    if n == 0:
        return [], Corpus(())
    rng = np.random.default_rng(config.seed)
    start_year, end_year = config.window
    census = date(end_year, 12, 31)
    span_years = end_year - start_year + 1

    ages = _sample_ages(rng, n)
    mu, s = _seniority_share_params(ages, config.age_seniority_corr_target,
                                    config.mean_appointment_age)
    share = np.clip(rng.beta(mu * s, (1.0 - mu) * s, size=n), 1e-6, 1.0 - 1e-6)
    seniority = (ages - MIN_CAREER_START_AGE) * share

    male = rng.random(n) < config.gender_male_share
    field_idx = rng.integers(0, len(config.fields), size=n)

    type_idx = rng.choice(len(UNIVERSITY_POOLS), size=n,
                          p=np.asarray(config.university_type_shares))
    pool_sizes = np.array([p[2] for p in UNIVERSITY_POOLS])
    univ_num = rng.integers(0, pool_sizes[type_idx])

    roster: list[Professor] = []
    univ_ids: list[str] = []
    for i in range(n):
        birth = census - timedelta(days=round(ages[i] * DAYS_PER_YEAR))
        appointment_age = ages[i] - seniority[i]
        appointment = birth + timedelta(days=round(appointment_age * DAYS_PER_YEAR))
        utype, prefix, _ = UNIVERSITY_POOLS[type_idx[i]]
        fld = config.fields[field_idx[i]]
        roster.append(Professor(
            id=f"P{i + 1:05d}",
            gender="male" if male[i] else "female",
            birth_date=birth,
            appointment_date=min(appointment, census),
            sds=fld.sds,
            uda=fld.uda,
            university_type=utype,
            active_span=None,
        ))
        univ_ids.append(f"{prefix}{univ_num[i]}")

    # Latent productivity and publication counts.
    log_rate = (config.base_log_rate
                + config.true_age_effect * ages
                + config.true_seniority_effect * seniority
                + config.true_gender_effect * male.astype(float))
    rate = np.exp(log_rate)
    if config.latent_heterogeneity > 0:
        shape = 1.0 / config.latent_heterogeneity
        rate = rate * rng.gamma(shape=shape, scale=1.0 / shape, size=n)
    counts = rng.poisson(rate * span_years)
    total = int(counts.sum())
    if total == 0:
        return roster, Corpus(())

    owner = np.repeat(np.arange(n), counts)
    years = rng.integers(start_year, end_year + 1, size=total)

    # Per-field citation and impact-factor regimes; normalization must undo them.
    n_fields = len(config.fields)
    cite_base = 4.0 + 2.0 * (np.arange(n_fields) % 5)
    if_mu = np.log(1.2 + 0.4 * (np.arange(n_fields) % 4))
    pub_field = field_idx[owner]

    impact = np.round(rng.lognormal(mean=if_mu[pub_field], sigma=0.4), 3)
    cell_mean = cite_base[pub_field] * (end_year + 2 - years) / 2.0
    gamma_mult = rng.gamma(shape=1.0 / config.citation_dispersion,
                           scale=config.citation_dispersion, size=total)
    citations = rng.poisson(cell_mean * gamma_mult)

    byline_mean = np.array([BYLINE_MEAN[f.convention] for f in config.fields])
    n_authors = 1 + rng.poisson(byline_mean[pub_field] - 1.0, size=total)
    focal_pos = rng.integers(0, n_authors)
    n_co = int(n_authors.sum()) - total
    co_same = rng.random(n_co) < SAME_UNIVERSITY_SHARE
    co_ext = rng.integers(0, EXTERNAL_UNIVERSITIES, size=n_co)

    pubs: list[Publication] = []
    co_cursor = 0
    serial = 0
    for j in range(total):
        prof_i = owner[j]
        focal_univ = univ_ids[prof_i]
        byline = []
        for pos in range(n_authors[j]):
            if pos == focal_pos[j]:
                byline.append(Authorship(roster[prof_i].id, focal_univ))
            else:
                univ = focal_univ if co_same[co_cursor] else f"EXT{co_ext[co_cursor]}"
                serial += 1
                byline.append(Authorship(f"X{serial}", univ))
                co_cursor += 1
        pubs.append(Publication(
            id=f"W{j + 1:07d}",
            year=int(years[j]),
            subject_category=config.fields[pub_field[j]].sds,
            journal_if=float(impact[j]),
            citations=int(citations[j]),
            doc_type="article",
            byline=tuple(byline),
        ))
    return roster, Corpus(pubs)


@dataclass
class RunResult:
    run: int
    seed: int
    n: int = 0
    n_terms: int = 0
    age_ame: float | None = None
    seniority_ame: float | None = None
    pseudo_r2: float | None = None
    aic: float | None = None
    age_degree: int | None = None
    converged: bool = False
    error: str | None = None


@dataclass
class RecoveryReport:
    config: SimConfig
    runs: list[RunResult]
    n_runs: int
    n_failed: int
    age_negative_fraction: float | None
    seniority_positive_fraction: float | None
    mean_age_ame: float | None
    mean_seniority_ame: float | None
    sd_age_ame: float | None
    sd_seniority_ame: float | None
    mean_pseudo_r2: float | None
    low_power: bool

    def to_dict(self) -> dict:
        cfg = {
            "n_professors": self.config.n_professors,
            "fields": [[f.sds, f.uda, f.convention] for f in self.config.fields],
            "true_age_effect": self.config.true_age_effect,
            "true_seniority_effect": self.config.true_seniority_effect,
            "true_gender_effect": self.config.true_gender_effect,
            "base_log_rate": self.config.base_log_rate,
            "age_seniority_corr_target": self.config.age_seniority_corr_target,
            "citation_dispersion": self.config.citation_dispersion,
            "latent_heterogeneity": self.config.latent_heterogeneity,
            "window": list(self.config.window),
            "seed": self.config.seed,
            "gender_male_share": self.config.gender_male_share,
            "mean_appointment_age": self.config.mean_appointment_age,
            "university_type_shares": list(self.config.university_type_shares),
        }
        return {
            "config": cfg,
            "n_runs": self.n_runs,
            "n_failed": self.n_failed,
            "age_negative_fraction": self.age_negative_fraction,
            "seniority_positive_fraction": self.seniority_positive_fraction,
            "mean_age_ame": self.mean_age_ame,
            "mean_seniority_ame": self.mean_seniority_ame,
            "sd_age_ame": self.sd_age_ame,
            "sd_seniority_ame": self.sd_seniority_ame,
            "mean_pseudo_r2": self.mean_pseudo_r2,
            "low_power": self.low_power,
            "runs": [vars(r) for r in self.runs],
        }


def _mean_sd(values: list[float]) -> tuple[float | None, float | None]:
    if not values:
        return None, None
    arr = np.asarray(values)
    sd = float(arr.std(ddof=1)) if arr.size > 1 else None
    return float(arr.mean()), sd


def recovery_experiment(config: SimConfig, n_runs: int,
                        max_degree: int = 1,
                        dependent: str = "FSS") -> RecoveryReport:
    """Repeated generate -> score -> percentile -> fit cycles.

    Run r uses seed ``config.seed + r``.  Per-run failures are recorded and do
    not stop the experiment.  Sign-recovery fractions are taken over the runs
    that produced the corresponding effect.
    """
    if n_runs <= 0:
        raise ValueError("n_runs must be positive")
    results: list[RunResult] = []
    for run in range(n_runs):
        cfg = replace(config, seed=config.seed + run)
        outcome = RunResult(run=run, seed=cfg.seed)
        try:
            roster, corpus = generate_cohort(cfg)
            census = date(cfg.window[1], 12, 31)
            _, _, _, rows = run_scoring(roster, corpus, cfg.conventions(),
                                        census, cfg.window)
            spec = ModelSpec(dependent=dependent)
            if max_degree > 1:
                fit = fit_with_selected_degree(rows, spec, max_degree=max_degree)
            else:
                fit = fit_model(rows, spec)
            outcome.n = fit.n
            outcome.n_terms = len(fit.terms)
            outcome.age_ame = fit.ame.get("Age")
            outcome.seniority_ame = fit.ame.get("Seniority")
            outcome.pseudo_r2 = fit.pseudo_r2
            outcome.aic = fit.aic
            outcome.age_degree = fit.age_degree
            outcome.converged = fit.converged
        except Exception as exc:  # per-run isolation
            outcome.error = f"{type(exc).__name__}: {exc}"
        results.append(outcome)

    ok = [r for r in results if r.error is None]
    age_ames = [r.age_ame for r in ok if r.age_ame is not None]
    sen_ames = [r.seniority_ame for r in ok if r.seniority_ame is not None]
    r2s = [r.pseudo_r2 for r in ok if r.pseudo_r2 is not None]
    mean_age, sd_age = _mean_sd(age_ames)
    mean_sen, sd_sen = _mean_sd(sen_ames)
    low_power = (not ok) or any(r.n < 25 * max(r.n_terms, 1) for r in ok)
    return RecoveryReport(
        config=config,
        runs=results,
        n_runs=n_runs,
        n_failed=len(results) - len(ok),
        age_negative_fraction=(sum(a < 0 for a in age_ames) / len(age_ames)
                               if age_ames else None),
        seniority_positive_fraction=(sum(a > 0 for a in sen_ames) / len(sen_ames)
                                     if sen_ames else None),
        mean_age_ame=mean_age,
        mean_seniority_ame=mean_sen,
        sd_age_ame=sd_age,
        sd_seniority_ame=sd_sen,
        mean_pseudo_r2=float(np.mean(r2s)) if r2s else None,
        low_power=low_power,
    )
