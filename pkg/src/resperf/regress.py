"""Fractional-response logit regression by quasi-maximum likelihood.

The conditional mean of a [0,1] outcome is modeled as E(y|x) = G(x'b) with G
the logistic CDF.  Estimation maximizes the Bernoulli quasi-log-likelihood

    sum_i  y_i log G(x_i'b) + (1 - y_i) log(1 - G(x_i'b))

by damped Newton steps (equivalently iteratively reweighted least squares),
which is consistent for the mean parameters whatever the true conditional
distribution of y.  Inference uses the sandwich covariance (robust to that
distributional agnosticism); the classical inverse-information covariance is
kept alongside for comparison.  The age profile enters as a polynomial whose
degree is chosen by AIC.  Age is mean-centered before powers are taken to
tame collinearity, and coefficients are back-transformed to the raw-age scale
(and onto the 0-100 percentile scale) for reporting.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Mapping, Sequence

import numpy as np

MAX_ITER = 100
GRAD_TOL = 1e-8
# Stall guard; loose enough to stop on a flat objective, tight enough that the
# gradient criterion gets the final Newton step it needs near the optimum.
QLL_REL_TOL = 1e-14
# |x'b| beyond this on an accepted step means the optimizer is chasing a
# supremum that is not attained (quasi-separation).
ETA_BOUND = 30.0
VIF_THRESHOLD = 10.0

COVARIATE_ORDER = ("Seniority", "Gender", "U1", "U2", "U3")
AGE_TERMS = ("Age", "Age^2", "Age^3")
REPORT_SCALE = 100.0  # coefficients, SEs and AMEs are reported per percentile


class FitError(RuntimeError):
    pass


class QuasiSeparationError(FitError):
    pass


def logistic(eta):
    """Numerically stable logistic CDF."""
    eta = np.asarray(eta, dtype=float)
    out = np.empty_like(eta)
    pos = eta >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-eta[pos]))
    expe = np.exp(eta[~pos])
    out[~pos] = expe / (1.0 + expe)
    return out


def bernoulli_qll(y, eta) -> float:
    """Quasi-log-likelihood; finite for y at 0 or 1 since G never reaches them."""
    y = np.asarray(y, dtype=float)
    eta = np.asarray(eta, dtype=float)
    # log G = -softplus(-eta), log(1-G) = -softplus(eta)
    return float(-(y * np.logaddexp(0.0, -eta)
                   + (1.0 - y) * np.logaddexp(0.0, eta)).sum())


@dataclass
class CoreFit:
    """Raw solver output on the design's own column scale."""
    beta: np.ndarray
    cov_robust: np.ndarray
    cov_classical: np.ndarray
    qll: float
    aic: float
    n: int
    k: int
    n_iter: int
    converged: bool
    grad_norm: float


def fit_fractional_logit(y, X, max_iter: int = MAX_ITER,
                         grad_tol: float = GRAD_TOL) -> CoreFit:
    """Fit E(y|x) = G(x'b) by damped Newton on the quasi-log-likelihood.

    Converges when the gradient sup-norm falls below ``grad_tol`` or the
    relative quasi-log-likelihood change falls below 1e-14.  Steps that lower
    the objective beyond rounding noise are halved.  Raises
    :class:`QuasiSeparationError` when
    the linear predictor diverges, :class:`FitError` on a singular
    information matrix or n <= k.
    """
    y = np.asarray(y, dtype=float)
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise FitError("design matrix must be 2-D")
    n, k = X.shape
    if y.shape != (n,):
        raise FitError(f"y has shape {y.shape}, expected ({n},)")
    if np.any((y < 0) | (y > 1)):
        raise FitError("responses must lie in [0, 1]")
    if n <= k:
        raise FitError(f"need more observations than terms (n={n}, k={k})")

    beta = np.zeros(k)
    eta = X @ beta
    qll = bernoulli_qll(y, eta)
    converged = False
    steps = 0
    for _ in range(max_iter):
        g_fit = logistic(eta)
        grad = X.T @ (y - g_fit)
        if float(np.abs(grad).max()) < grad_tol:
            converged = True
            break
        w = g_fit * (1.0 - g_fit)
        info = X.T @ (X * w[:, None])
        try:
            step = np.linalg.solve(info, grad)
        except np.linalg.LinAlgError as exc:
            raise FitError("singular information matrix; prune the design first") from exc

        # Near the optimum the true ascent per step falls below the floating
        # resolution of the objective; the slack keeps the line search from
        # rejecting the final gradient-polishing step.
        slack = 32.0 * np.finfo(float).eps * (abs(qll) + 1.0)
        scale = 1.0
        accepted = False
        for _ in range(50):
            cand = beta + scale * step
            eta_cand = X @ cand
            qll_cand = bernoulli_qll(y, eta_cand)
            if qll_cand >= qll - slack:
                accepted = True
                break
            scale *= 0.5
        if not accepted:
            break  # no ascent possible at floating precision
        rel_change = abs(qll_cand - qll) / (abs(qll) + 1.0)
        beta, eta, qll = cand, eta_cand, qll_cand
        steps += 1
        if float(np.abs(eta).max()) > ETA_BOUND:
            raise QuasiSeparationError(
                f"diverging coefficients: |x'b| reached {float(np.abs(eta).max()):.1f}")
        if rel_change < QLL_REL_TOL:
            converged = True
            break

    g_fit = logistic(eta)
    grad_norm = float(np.abs(X.T @ (y - g_fit)).max())
    if not converged and grad_norm < grad_tol:
        converged = True
    w = g_fit * (1.0 - g_fit)
    resid = y - g_fit
    info = X.T @ (X * w[:, None])
    try:
        bread = np.linalg.inv(info)
    except np.linalg.LinAlgError as exc:
        raise FitError("singular information matrix at the solution") from exc
    meat = X.T @ (X * (resid ** 2)[:, None])
    cov_robust = bread @ meat @ bread
    aic = 2.0 * k - 2.0 * qll
    return CoreFit(beta=beta, cov_robust=cov_robust, cov_classical=bread,
                   qll=qll, aic=aic, n=n, k=k, n_iter=steps,
                   converged=converged, grad_norm=grad_norm)


def mcfadden_pseudo_r2(fit: CoreFit, y) -> float:
    """1 - qll_model / qll_null with an intercept-only null fit on the same y."""
    y = np.asarray(y, dtype=float)
    null_fit = fit_fractional_logit(y, np.ones((y.shape[0], 1)))
    if null_fit.qll == 0.0:
        raise ValueError("degenerate null model: quasi-log-likelihood is zero")
    r2 = 1.0 - fit.qll / null_fit.qll
    return max(0.0, r2)  # the model nests the null; clamp convergence slack


@dataclass
class CollinearityReport:
    X: np.ndarray
    columns: tuple[str, ...]
    dropped: tuple[str, ...]
    vifs: dict[str, float]


def _ols_r2(target: np.ndarray, others: np.ndarray) -> float:
    coef, *_ = np.linalg.lstsq(others, target, rcond=None)
    resid = target - others @ coef
    centered = target - target.mean()
    sst = float(centered @ centered)
    if sst == 0.0:
        return 1.0
    return 1.0 - float(resid @ resid) / sst


def collinearity_check(X, columns: Sequence[str] | None = None,
                       vif_exempt: Sequence[str] = (),
                       threshold: float = VIF_THRESHOLD) -> CollinearityReport:
    """Prune a design matrix.

    Exactly dependent columns go first (the later-listed duplicate is the one
    removed); then columns with VIF above ``threshold`` are removed one at a
    time, later-listed first.  Columns in ``vif_exempt`` (and any intercept)
    are never removed for high VIF, only for exact dependence.  VIFs of the
    retained non-intercept columns are reported.
    """
    X = np.asarray(X, dtype=float)
    n, k = X.shape
    if columns is None:
        columns = tuple(f"x{i}" for i in range(k))
    columns = tuple(columns)
    if len(columns) != k:
        raise ValueError("one name per column required")
    exempt = set(vif_exempt) | {"Intercept"}

    kept: list[int] = []
    dropped: list[str] = []
    for j in range(k):
        trial = X[:, kept + [j]]
        if np.linalg.matrix_rank(trial) == len(kept) + 1:
            kept.append(j)
        else:
            dropped.append(columns[j])

    def vif_of(idx: int, current: list[int]) -> float:
        others = [i for i in current if i != idx]
        if not others:
            return 1.0
        r2 = _ols_r2(X[:, idx], X[:, others])
        if r2 >= 1.0:
            return math.inf
        return 1.0 / (1.0 - r2)

    while True:
        candidates = [i for i in kept if columns[i] not in exempt
                      and not _is_constant(X[:, i])]
        offenders = [i for i in candidates if vif_of(i, kept) > threshold]
        if not offenders:
            break
        worst = max(offenders)  # later-listed first
        kept.remove(worst)
        dropped.append(columns[worst])

    vifs = {columns[i]: vif_of(i, kept) for i in kept if not _is_constant(X[:, i])}
    return CollinearityReport(X=X[:, kept],
                              columns=tuple(columns[i] for i in kept),
                              dropped=tuple(dropped), vifs=vifs)


def _is_constant(col: np.ndarray) -> bool:
    return bool(np.all(col == col[0]))


@dataclass(frozen=True)
class RegressionRow:
    """One professor's regression inputs."""
    professor_id: str
    uda: str
    age: float
    seniority: float
    gender: int
    u1: int
    u2: int
    u3: int
    percentiles: Mapping[str, float] = field(default_factory=dict)


@dataclass(frozen=True)
class ModelSpec:
    dependent: str = "FSS"
    age_degree: int = 1
    covariates: tuple[str, ...] = COVARIATE_ORDER
    subset_filter: Callable[[RegressionRow], bool] | None = None

    def __post_init__(self):
        if not 1 <= self.age_degree <= 3:
            raise ValueError(f"age_degree must be 1..3, got {self.age_degree}")
        if self.dependent not in ("FSS", "P", "IA", "IJ"):
            raise ValueError(f"unknown dependent indicator {self.dependent!r}")
        unknown = [c for c in self.covariates if c not in COVARIATE_ORDER]
        if unknown:
            raise ValueError(f"unknown covariates: {', '.join(unknown)}")
        if len(set(self.covariates)) != len(self.covariates):
            raise ValueError("covariates must be distinct")

    @classmethod
    def from_mapping(cls, data: Mapping) -> "ModelSpec":
        """Key-value form: dependent, age_degree, covariates, max_seniority."""
        kwargs: dict = {}
        if "dependent" in data:
            kwargs["dependent"] = str(data["dependent"])
        if "age_degree" in data:
            kwargs["age_degree"] = int(data["age_degree"])
        if "covariates" in data:
            kwargs["covariates"] = tuple(data["covariates"])
        if "max_seniority" in data and data["max_seniority"] is not None:
            bound = float(data["max_seniority"])
            kwargs["subset_filter"] = lambda row: row.seniority < bound
        extra = set(data) - {"dependent", "age_degree", "covariates", "max_seniority"}
        if extra:
            raise ValueError(f"unknown model spec keys: {', '.join(sorted(extra))}")
        return cls(**kwargs)


_COVARIATE_GETTERS = {
    "Seniority": lambda r: r.seniority,
    "Gender": lambda r: r.gender,
    "U1": lambda r: r.u1,
    "U2": lambda r: r.u2,
    "U3": lambda r: r.u3,
}


@dataclass
class Design:
    """Pruned design matrix on the centered-age scale."""
    y: np.ndarray
    X: np.ndarray
    columns: tuple[str, ...]
    age_degree: int
    age_mean: float
    dropped: tuple[str, ...]
    vifs: dict[str, float]
    row_ids: tuple[str, ...]

    def column_index(self, name: str) -> int:
        try:
            return self.columns.index(name)
        except ValueError:
            raise ValueError(f"unknown design column {name!r}") from None


def build_design(rows: Sequence[RegressionRow], spec: ModelSpec) -> Design:
    """Assemble y and X for a model spec.

    Rows without a defined percentile for the dependent indicator are
    excluded, as are rows rejected by the subset filter.  Age is centered on
    the included sample's mean before powers are taken; exact duplicates and
    high-VIF columns are pruned (age powers are VIF-exempt).
    """
    included = []
    for row in rows:
        if spec.subset_filter is not None and not spec.subset_filter(row):
            continue
        if spec.dependent not in row.percentiles:
            continue
        included.append(row)
    if not included:
        raise FitError("empty design: no usable observations")

    y = np.array([r.percentiles[spec.dependent] for r in included], dtype=float) / 100.0
    if np.all(y == y[0]):
        raise FitError("dependent variable is constant")

    ages = np.array([r.age for r in included], dtype=float)
    age_mean = float(ages.mean())
    centered = ages - age_mean

    cols = [np.ones(len(included))]
    names = ["Intercept"]
    for degree in range(1, spec.age_degree + 1):
        cols.append(centered ** degree)
        names.append(AGE_TERMS[degree - 1])
    for cov in spec.covariates:
        getter = _COVARIATE_GETTERS[cov]
        cols.append(np.array([float(getter(r)) for r in included]))
        names.append(cov)

    X = np.column_stack(cols)
    report = collinearity_check(X, names, vif_exempt=AGE_TERMS)
    return Design(y=y, X=report.X, columns=report.columns,
                  age_degree=spec.age_degree, age_mean=age_mean,
                  dropped=report.dropped, vifs=report.vifs,
                  row_ids=tuple(r.professor_id for r in included))


def select_age_degree(design_builder: Callable[[int], tuple[np.ndarray, np.ndarray]],
                      max_degree: int = 3) -> int:
    """Degree in 1..max_degree with minimal AIC; ties go to the lower degree.

    ``design_builder(degree)`` returns (y, X).  Degrees whose fit fails are
    skipped; if every degree fails the last error is re-raised.
    """
    if not 1 <= max_degree <= 3:
        raise ValueError(f"max_degree must be 1..3, got {max_degree}")
    best_degree = None
    best_aic = math.inf
    last_error: Exception | None = None
    for degree in range(1, max_degree + 1):
        try:
            y, X = design_builder(degree)
            fit = fit_fractional_logit(y, X)
        except FitError as exc:
            last_error = exc
            continue
        if fit.aic < best_aic:
            best_degree, best_aic = degree, fit.aic
    if best_degree is None:
        raise FitError(f"all candidate degrees failed: {last_error}")
    return best_degree


def average_marginal_effects(beta: np.ndarray, design: Design,
                             variables: Sequence[str] | None = None
                             ) -> dict[str, float]:
    """Average marginal effects on the percentile (x100) scale.

    Continuous variables use the analytic derivative averaged over the
    sample; the age polynomial is pooled into a single effect
    mean_i g(eta_i) * sum_j j*b_j*a_i^(j-1).  Columns holding only 0/1 values
    are treated as dummies: mean of G(eta | v=1) - G(eta | v=0).
    """
    beta = np.asarray(beta, dtype=float)
    X = design.X
    eta = X @ beta
    g = logistic(eta)
    dens = g * (1.0 - g)

    age_cols = [(j + 1, design.columns.index(name))
                for j, name in enumerate(AGE_TERMS) if name in design.columns]

    requested = list(variables) if variables is not None else None
    if requested is not None:
        known = set(design.columns) | ({"Age"} if age_cols else set())
        for name in requested:
            if name not in known:
                raise ValueError(f"unknown variable {name!r}")

    out: dict[str, float] = {}
    if age_cols and (requested is None or "Age" in requested):
        a = X[:, age_cols[0][1]]  # centered age values
        deriv = np.zeros_like(a)
        for power, col in age_cols:
            deriv += power * beta[col] * a ** (power - 1)
        out["Age"] = REPORT_SCALE * float((dens * deriv).mean())

    for idx, name in enumerate(design.columns):
        if name == "Intercept" or name in AGE_TERMS:
            continue
        if requested is not None and name not in requested:
            continue
        col = X[:, idx]
        if np.isin(col, (0.0, 1.0)).all():
            eta_hi = eta + (1.0 - col) * beta[idx]
            eta_lo = eta - col * beta[idx]
            out[name] = REPORT_SCALE * float((logistic(eta_hi) - logistic(eta_lo)).mean())
        else:
            out[name] = REPORT_SCALE * float(dens.mean() * beta[idx])
    return out


def _raw_age_transform(columns: Sequence[str], age_mean: float) -> np.ndarray:
    """Linear map T with beta_raw = T @ beta_centered.

    Expands (age - m)^j into raw-age powers; non-age terms pass through.
    """
    k = len(columns)
    T = np.eye(k)
    if "Intercept" not in columns:
        return T
    i_int = columns.index("Intercept")
    m = age_mean
    for j, name in enumerate(AGE_TERMS, start=1):
        if name not in columns:
            continue
        src = columns.index(name)
        T[i_int, src] = (-m) ** j
        for i in range(1, j + 1):
            dst = columns.index(AGE_TERMS[i - 1])
            T[dst, src] = math.comb(j, i) * (-m) ** (j - i)
    return T


@dataclass
class FitResult:
    """One fitted model, on the reporting scale.

    Coefficients and standard errors are back-transformed to raw-age powers
    and multiplied by 100 so a unit step moves the expected percentile, like
    the AMEs.  ``qll``/``aic`` stay on the estimation scale.
    """
    dependent: str = "FSS"
    terms: tuple[str, ...] = ()
    coefficients: dict[str, float] = field(default_factory=dict)
    robust_se: dict[str, float] = field(default_factory=dict)
    classical_se: dict[str, float] = field(default_factory=dict)
    ame: dict[str, float] = field(default_factory=dict)
    aic: float = math.nan
    pseudo_r2: float = math.nan
    qll: float = math.nan
    n: int = 0
    converged: bool = True
    dropped_terms: tuple[str, ...] = ()
    age_degree: int = 1
    age_mean: float = math.nan
    vifs: dict[str, float] = field(default_factory=dict)
    n_iter: int = 0


def fit_model(rows: Sequence[RegressionRow], spec: ModelSpec) -> FitResult:
    """Build the design for ``spec``, fit it, and assemble reporting output."""
    design = build_design(rows, spec)
    core = fit_fractional_logit(design.y, design.X)
    ames = average_marginal_effects(core.beta, design)
    pseudo = mcfadden_pseudo_r2(core, design.y)

    T = _raw_age_transform(design.columns, design.age_mean)
    beta_raw = T @ core.beta
    cov_raw = T @ core.cov_robust @ T.T
    cov_raw_classical = T @ core.cov_classical @ T.T
    se_raw = np.sqrt(np.clip(np.diag(cov_raw), 0.0, None))
    se_raw_classical = np.sqrt(np.clip(np.diag(cov_raw_classical), 0.0, None))

    s = REPORT_SCALE
    return FitResult(
        dependent=spec.dependent,
        terms=design.columns,
        coefficients={c: s * float(b) for c, b in zip(design.columns, beta_raw)},
        robust_se={c: s * float(v) for c, v in zip(design.columns, se_raw)},
        classical_se={c: s * float(v) for c, v in zip(design.columns, se_raw_classical)},
        ame=ames,
        aic=core.aic,
        pseudo_r2=pseudo,
        qll=core.qll,
        n=core.n,
        converged=core.converged,
        dropped_terms=design.dropped,
        age_degree=design.age_degree,
        age_mean=design.age_mean,
        vifs=design.vifs,
        n_iter=core.n_iter,
    )


def fit_with_selected_degree(rows: Sequence[RegressionRow], spec: ModelSpec,
                             max_degree: int = 3) -> FitResult:
    """AIC-select the age degree (1..max_degree), then fit at that degree."""
    def builder(degree: int):
        design = build_design(rows, replace(spec, age_degree=degree))
        return design.y, design.X

    degree = select_age_degree(builder, max_degree=max_degree)
    return fit_model(rows, replace(spec, age_degree=degree))
