"""Observed-vs-estimated comparison, residual associations, group summaries.

Includes a self-contained Student-t tail (continued-fraction incomplete
beta) for the paired test, rank-based Spearman association, and a pivoted-QR
least-squares path that flags exactly-collinear composite columns as not
estimated instead of failing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import qr as _pivoted_qr

from .data import Dataset
from .errors import AllCollinear, DataError
from .indices import CompositeMatrix

_PIVOT_TOL = 1e-10


# ---------------------------------------------------------------------------
# Student's t distribution via the regularized incomplete beta function

_CF_EPS = 3e-16
_CF_FPMIN = 1e-300
_CF_MAXIT = 500


def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction of the incomplete beta (modified Lentz method)."""
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _CF_FPMIN:
        d = _CF_FPMIN
    d = 1.0 / d
    h = d
    for m in range(1, _CF_MAXIT + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_FPMIN:
            d = _CF_FPMIN
        c = 1.0 + aa / c
        if abs(c) < _CF_FPMIN:
            c = _CF_FPMIN
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _CF_FPMIN:
            d = _CF_FPMIN
        c = 1.0 + aa / c
        if abs(c) < _CF_FPMIN:
            c = _CF_FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _CF_EPS:
            return h
    raise DataError("incomplete beta continued fraction did not converge")


def betainc_reg(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta I_x(a, b)."""
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_front = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
        + a * math.log(x) + b * math.log(1.0 - x)
    )
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def t_two_sided_p(t: float, df: float) -> float:
    """Two-sided p-value of Student's t with ``df`` degrees of freedom."""
    if df <= 0:
        raise DataError("degrees of freedom must be > 0")
    return betainc_reg(df / 2.0, 0.5, df / (df + t * t))


def t_quantile(prob: float, df: float) -> float:
    """Quantile of Student's t by bisection on the two-sided tail."""
    if not 0.0 < prob < 1.0:
        raise DataError("probability must be in (0, 1)")
    if prob == 0.5:
        return 0.0
    if prob < 0.5:
        return -t_quantile(1.0 - prob, df)
    target = 2.0 * (1.0 - prob)  # two-sided tail mass of the answer
    lo, hi = 0.0, 1.0
    while t_two_sided_p(hi, df) > target:
        hi *= 2.0
        if hi > 1e12:
            raise DataError("t quantile out of range")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if t_two_sided_p(mid, df) > target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# Distribution comparison

@dataclass
class ComparisonReport:
    """Error metrics and the paired t-test of estimated against observed.

    The t fields are None when the paired differences have zero variance
    (the test is undefined; the error metrics still apply) and ``pearson_r``
    is None when either side is constant.
    """

    n: int
    mean_obs: float
    mean_est: float
    mae: float
    rmse: float
    pearson_r: float | None
    mean_diff: float
    t_stat: float | None
    t_df: int
    t_pvalue: float | None
    ci95_lo: float | None
    ci95_hi: float | None


def compare(y_ref, y_est) -> ComparisonReport:
    """Compare an estimated distribution against the observed reference.

    d = y_est - y_ref drives MAE, RMSE, the paired t statistic
    mean(d) / (sd(d)/sqrt(N)) with N-1 degrees of freedom, and the 95%
    confidence interval of the mean difference.
    """
    ref = np.asarray(y_ref, dtype=float)
    est = np.asarray(y_est, dtype=float)
    if ref.shape != est.shape or ref.ndim != 1 or ref.shape[0] < 2:
        raise DataError("compare needs two equal-length vectors with N >= 2")
    n = ref.shape[0]
    d = est - ref
    mae = float(np.mean(np.abs(d)))
    rmse = float(math.sqrt(np.mean(d * d)))

    pearson = None
    if ref.std() > 0 and est.std() > 0:
        pearson = float(np.corrcoef(ref, est)[0, 1])

    mean_diff = float(d.mean())
    sd = float(d.std(ddof=1))
    df = n - 1
    if sd == 0.0:
        t_stat = p = lo = hi = None
    else:
        se = sd / math.sqrt(n)
        t_stat = mean_diff / se
        p = t_two_sided_p(t_stat, df)
        half = t_quantile(0.975, df) * se
        lo, hi = mean_diff - half, mean_diff + half
    return ComparisonReport(
        n=n, mean_obs=float(ref.mean()), mean_est=float(est.mean()),
        mae=mae, rmse=rmse, pearson_r=pearson, mean_diff=mean_diff,
        t_stat=t_stat, t_df=df, t_pvalue=p, ci95_lo=lo, ci95_hi=hi,
    )


# ---------------------------------------------------------------------------
# Residual associations

def average_ranks(x) -> np.ndarray:
    """Ranks 1..n with ties replaced by their average rank."""
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    order = np.argsort(x, kind="stable")
    ranks = np.empty(n)
    sorted_x = x[order]
    i = 0
    while i < n:
        j = i
        while j + 1 < n and sorted_x[j + 1] == sorted_x[i]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def _pearson(x: np.ndarray, y: np.ndarray) -> float:
    sx, sy = x.std(), y.std()
    if sx == 0.0 or sy == 0.0:
        return math.nan
    return float(np.mean((x - x.mean()) * (y - y.mean())) / (sx * sy))


@dataclass
class AssociationTable:
    """Pearson and Spearman association of residuals with each composite."""

    index_names: tuple[str, ...]
    pearson: np.ndarray
    spearman: np.ndarray


def _composite_values(composite, names=None) -> tuple[np.ndarray, tuple[str, ...]]:
    if isinstance(composite, CompositeMatrix):
        return composite.values, composite.index_names
    x = np.asarray(composite, dtype=float)
    if names is None:
        names = tuple(f"C{j + 1}" for j in range(x.shape[1]))
    return x, tuple(names)


def residual_associations(residuals, composite, names=None) -> AssociationTable:
    """Linear and rank association of the residuals with every composite.

    Spearman is Pearson on average ranks; undefined associations (constant
    input) come back as NaN, reported downstream as missing.
    """
    r = np.asarray(residuals, dtype=float)
    x, names = _composite_values(composite, names)
    if r.shape[0] != x.shape[0] or r.shape[0] < 3:
        raise DataError("residual associations need matching vectors with N >= 3")
    r_ranks = average_ranks(r)
    pearson = np.array([_pearson(r, x[:, j]) for j in range(x.shape[1])])
    spearman = np.array(
        [_pearson(r_ranks, average_ranks(x[:, j])) for j in range(x.shape[1])]
    )
    return AssociationTable(tuple(names), pearson, spearman)


# ---------------------------------------------------------------------------
# Least squares with collinearity flags

def _zscore_columns(x: np.ndarray) -> np.ndarray:
    mean = x.mean(axis=0)
    sd = x.std(axis=0, ddof=1)
    out = np.zeros_like(x)
    ok = sd > 0
    out[:, ok] = (x[:, ok] - mean[ok]) / sd[ok]
    return out


def _pivoted_lstsq(design: np.ndarray, y: np.ndarray, tol: float):
    """Least squares keeping only columns whose pivot survives the filter."""
    _, r, piv = _pivoted_qr(design, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    lead = diag[0] if diag.size else 0.0
    if lead <= 0.0:
        raise AllCollinear("design matrix is identically zero")
    rank = int(np.sum(diag >= tol * lead))
    if rank == 0:
        raise AllCollinear("no column survives the collinearity filter")
    kept = np.sort(piv[:rank])
    beta_kept, *_ = np.linalg.lstsq(design[:, kept], y, rcond=None)
    beta = np.full(design.shape[1], math.nan)
    beta[kept] = beta_kept
    estimated = np.zeros(design.shape[1], dtype=bool)
    estimated[kept] = True
    return beta, estimated


@dataclass
class OLSResult:
    """Standardized coefficients with per-column estimability flags."""

    index_names: tuple[str, ...]
    beta_std: np.ndarray       # NaN where not estimated
    estimated: np.ndarray      # False marks a collinearity casualty


def ols_standardized(residuals, composite, names=None, *, tol: float = _PIVOT_TOL) -> OLSResult:
    """Standardized least-squares coefficients of residuals on composites.

    Response and regressors are z-standardized; the solve uses QR with
    column pivoting, and any column whose pivot falls below ``tol`` times
    the leading pivot is reported as not estimated (NaN), mirroring how an
    exactly duplicated composite drops out of the fit.
    """
    y = np.asarray(residuals, dtype=float)
    x, names = _composite_values(composite, names)
    if y.shape[0] != x.shape[0] or y.shape[0] <= x.shape[1]:
        raise DataError("need more observations than regressors")
    zy = _zscore_columns(y.reshape(-1, 1))[:, 0]
    zx = _zscore_columns(x)
    beta, estimated = _pivoted_lstsq(zx, zy, tol)
    return OLSResult(tuple(names), beta, estimated)


@dataclass
class BaselineFit:
    """Plain linear-regression baseline with in-sample errors."""

    fitted: np.ndarray
    rmse: float
    mae: float
    coefficients: np.ndarray   # intercept first, NaN where not estimated
    estimated: np.ndarray


def baseline_lm(y, composite, *, tol: float = _PIVOT_TOL) -> BaselineFit:
    """Least squares of the target on the composites plus an intercept.

    Uses the same pivoted-QR collinearity handling as the standardized fit
    and reports in-sample RMSE and MAE for the benchmark table.
    """
    y = np.asarray(y, dtype=float)
    x, _ = _composite_values(composite)
    if y.shape[0] != x.shape[0] or y.shape[0] <= x.shape[1] + 1:
        raise DataError("need more observations than coefficients")
    design = np.column_stack([np.ones(y.shape[0]), x])
    beta, estimated = _pivoted_lstsq(design, y, tol)
    filled = np.where(np.isnan(beta), 0.0, beta)
    fitted = design @ filled
    resid = y - fitted
    rmse = float(math.sqrt(np.mean(resid * resid)))
    mae = float(np.mean(np.abs(resid)))
    return BaselineFit(fitted, rmse, mae, beta, estimated)


# ---------------------------------------------------------------------------
# Group summaries by territorial attribute

@dataclass
class UnitResults:
    """Per-unit outcomes feeding the group summaries and uncertainty map."""

    y_ref: np.ndarray
    y_est: np.ndarray
    coverage: np.ndarray
    adaptivity: np.ndarray


@dataclass(frozen=True)
class GroupSummary:
    """One (type, class) row of the per-attribute summary table."""

    type_label: str
    attr_class: int
    n: int
    coverage: float
    adaptivity: float
    y_ref: float
    y_est: float
    delta: float                     # 100 * (y_est / y_ref - 1); NaN if y_ref == 0
    mpi_means: tuple[float, ...] | None = None


def group_summaries(
    results: UnitResults,
    dataset: Dataset,
    attribute: str,
    composite=None,
) -> list[GroupSummary]:
    """Aggregate per-unit results by (center/periphery type, attribute class).

    Rows are emitted in lexical (type, class) order; all aggregates are
    plain means, and the relative difference uses the group means.
    """
    classes = dataset.profile_column(attribute)
    types = dataset.center_periph_labels()
    values = None if composite is None else _composite_values(composite)[0]
    keys = sorted({(t, int(c)) for t, c in zip(types, classes)})
    rows = []
    for t, c in keys:
        mask = np.array([ti == t and int(ci) == c for ti, ci in zip(types, classes)])
        n = int(mask.sum())
        ref_mean = float(results.y_ref[mask].mean())
        est_mean = float(results.y_est[mask].mean())
        delta = math.nan if ref_mean == 0.0 else 100.0 * (est_mean / ref_mean - 1.0)
        mpi_means = None
        if values is not None:
            mpi_means = tuple(float(v) for v in values[mask].mean(axis=0))
        rows.append(
            GroupSummary(
                type_label=t, attr_class=c, n=n,
                coverage=float(results.coverage[mask].mean()),
                adaptivity=float(results.adaptivity[mask].mean()),
                y_ref=ref_mean, y_est=est_mean, delta=delta, mpi_means=mpi_means,
            )
        )
    return rows
