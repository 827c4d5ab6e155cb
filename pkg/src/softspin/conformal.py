"""Split-conformal prediction intervals over MCMC batch replicates.

Stationary configurations are resampled into batches whose per-unit means
form an empirical predictive distribution. Raw interval bounds are plain
order-statistic quantiles of those batch means; a calibration subset of
units supplies nonconformity scores whose upper quantile widens every
interval symmetrically, giving distribution-free marginal coverage on the
test units under exchangeability.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import ConfigError, EmptyCalibration, InsufficientPool
from .sampler import make_rng


@dataclass(frozen=True)
class BatchSpec:
    """Batching, significance and split settings.

    Field defaults mirror the full-scale experiment (50000 stationary
    configurations, 10000 batches of 200 at alpha 0.05); desk-scale runs
    override them through configuration. ``repeats`` is the number of
    repeated calibration/test splits used to give each unit a coverage
    frequency rather than a single flag.
    """

    n_total: int = 50_000
    n_batches: int = 10_000
    batch_size: int = 200
    alpha: float = 0.05
    calib_frac: float = 0.5
    seed: int = 0
    repeats: int = 50

    def __post_init__(self):
        if self.n_total < 1 or self.n_batches < 1:
            raise ConfigError("BatchSpec: n_total and n_batches must be >= 1")
        if not 1 <= self.batch_size <= self.n_total:
            raise ConfigError("BatchSpec: need 1 <= batch_size <= n_total")
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError("BatchSpec: alpha must be in (0, 1)")
        if not 0.0 < self.calib_frac < 1.0:
            raise ConfigError("BatchSpec: calib_frac must be in (0, 1)")
        if self.repeats < 1:
            raise ConfigError("BatchSpec: repeats must be >= 1")


def batch_means(pool, spec: BatchSpec) -> np.ndarray:
    """B x N matrix of per-unit means over seeded bootstrap batches.

    Each batch draws ``batch_size`` configurations uniformly with
    replacement from the pool and averages them per unit.
    """
    pool = np.asarray(pool, dtype=float)
    if pool.ndim != 2:
        raise ConfigError("pool must be a (configs x units) matrix")
    p = pool.shape[0]
    if p < spec.batch_size:
        raise InsufficientPool(f"pool of {p} configs < batch size {spec.batch_size}")
    rng = make_rng(spec.seed)
    out = np.empty((spec.n_batches, pool.shape[1]))
    for b in range(spec.n_batches):
        idx = rng.integers(0, p, size=spec.batch_size)
        out[b] = pool[idx].mean(axis=0)
    return out


def _order_index(p: float, n: int) -> int:
    """1-based order-statistic index ceil(p*n), robust to float fuzz."""
    k = math.ceil(p * n - 1e-9)
    return min(max(k, 1), n)


def empirical_quantiles(column, alpha: float) -> tuple[float, float]:
    """Raw order-statistic quantiles at levels alpha/2 and 1 - alpha/2.

    Pure order statistics (index ceil(p*B), 1-based, no interpolation), the
    convention pinned for the calibration arithmetic.
    """
    x = np.sort(np.asarray(column, dtype=float))
    b = x.shape[0]
    if b < 2:
        raise ConfigError("need at least two replicates")
    lo = x[_order_index(alpha / 2.0, b) - 1]
    hi = x[_order_index(1.0 - alpha / 2.0, b) - 1]
    return float(lo), float(hi)


def nonconformity(y, q_lo, q_hi):
    """Signed exceedance of y beyond [q_lo, q_hi]; zero inside the interval."""
    y = np.asarray(y, dtype=float)
    return np.maximum.reduce([q_lo - y, y - q_hi, np.zeros_like(y)])


class Calibration(NamedTuple):
    q_hat: float
    order_index: int
    degenerate: bool


def calibrate(scores, alpha: float) -> Calibration:
    """Conformal offset: the ceil((n+1)(1-alpha))-th smallest score.

    When that index exceeds n (too few calibration points for the level) the
    maximum score is used and flagged as degenerate rather than failing.
    """
    x = np.sort(np.asarray(scores, dtype=float))
    n = x.shape[0]
    if n < 1:
        raise EmptyCalibration("no calibration scores")
    k = math.ceil((n + 1) * (1.0 - alpha) - 1e-9)
    if k > n:
        return Calibration(float(x[-1]), n, True)
    return Calibration(float(x[max(k, 1) - 1]), max(k, 1), False)


@dataclass
class ConformalResult:
    """Per-unit raw and calibrated interval bounds for one split.

    lo = q_lo - q_hat and hi = q_hi + q_hat for every unit; ``covered``
    compares the observed value against the calibrated interval, and the
    marginal-coverage guarantee applies to the test units only.
    """

    q_lo: np.ndarray
    q_hi: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    covered: np.ndarray
    q_hat: float
    degenerate: bool
    calib_idx: np.ndarray
    test_idx: np.ndarray
    alpha: float

    @property
    def width(self) -> np.ndarray:
        return self.hi - self.lo

    @property
    def test_coverage(self) -> float:
        return float(np.mean(self.covered[self.test_idx]))


def _raw_bounds(batches: np.ndarray, alpha: float) -> tuple[np.ndarray, np.ndarray]:
    sorted_cols = np.sort(batches, axis=0)
    b = batches.shape[0]
    lo = sorted_cols[_order_index(alpha / 2.0, b) - 1]
    hi = sorted_cols[_order_index(1.0 - alpha / 2.0, b) - 1]
    return lo, hi


def _calibrated_split(q_lo, q_hi, y_obs, alpha: float, calib_frac: float,
                      seed: int) -> ConformalResult:
    n = y_obs.shape[0]
    perm = make_rng(seed).permutation(n)
    n_cal = int(calib_frac * n)
    if n_cal < 1 or n_cal >= n:
        raise EmptyCalibration(
            f"calib_frac {calib_frac} leaves an empty calibration or test set at N={n}"
        )
    calib_idx = np.sort(perm[:n_cal])
    test_idx = np.sort(perm[n_cal:])
    scores = nonconformity(y_obs[calib_idx], q_lo[calib_idx], q_hi[calib_idx])
    cal = calibrate(scores, alpha)
    lo = q_lo - cal.q_hat
    hi = q_hi + cal.q_hat
    covered = (y_obs >= lo) & (y_obs <= hi)
    return ConformalResult(
        q_lo=q_lo.copy(), q_hi=q_hi.copy(), lo=lo, hi=hi, covered=covered,
        q_hat=cal.q_hat, degenerate=cal.degenerate,
        calib_idx=calib_idx, test_idx=test_idx, alpha=alpha,
    )


def conformal_intervals(batches, y_obs, spec: BatchSpec) -> ConformalResult:
    """Calibrated prediction intervals for every unit.

    Units are split into calibration and test sets by a seeded permutation;
    calibration units supply the scores, and the resulting offset widens the
    raw quantile interval of every unit.
    """
    batches = np.asarray(batches, dtype=float)
    y_obs = np.asarray(y_obs, dtype=float)
    if batches.ndim != 2 or batches.shape[1] != y_obs.shape[0]:
        raise ConfigError("batches must be (B x N) matching y_obs length")
    q_lo, q_hi = _raw_bounds(batches, spec.alpha)
    return _calibrated_split(q_lo, q_hi, y_obs, spec.alpha, spec.calib_frac, spec.seed)


def repeat_splits(batches, y_obs, spec: BatchSpec) -> list[ConformalResult]:
    """Repeat the calibration/test split ``spec.repeats`` times.

    The raw quantiles are computed once; split r uses seed ``spec.seed + r``.
    """
    batches = np.asarray(batches, dtype=float)
    y_obs = np.asarray(y_obs, dtype=float)
    q_lo, q_hi = _raw_bounds(batches, spec.alpha)
    return [
        _calibrated_split(q_lo, q_hi, y_obs, spec.alpha, spec.calib_frac, spec.seed + r)
        for r in range(spec.repeats)
    ]


class SixNumber(NamedTuple):
    """Minimum, quartiles, mean and maximum, in summary-table order."""

    min: float
    q1: float
    median: float
    mean: float
    q3: float
    max: float


def six_number(values) -> SixNumber:
    x = np.asarray(values, dtype=float)
    q1, med, q3 = np.quantile(x, [0.25, 0.5, 0.75])
    return SixNumber(float(x.min()), float(q1), float(med), float(x.mean()),
                     float(q3), float(x.max()))


@dataclass
class CoverageAdaptivity:
    """Per-unit coverage frequency and interval width, with summaries."""

    coverage: np.ndarray
    adaptivity: np.ndarray
    coverage_summary: SixNumber
    adaptivity_summary: SixNumber


def coverage_adaptivity(results, y_obs) -> CoverageAdaptivity:
    """Summarize coverage and interval width per unit.

    ``results`` may be a single split or a sequence of repeated splits; with
    repeats, a unit's coverage is the fraction of splits whose calibrated
    interval contains its observed value, and its adaptivity is the mean
    calibrated width.
    """
    if isinstance(results, ConformalResult):
        results = [results]
    if not results:
        raise ConfigError("no conformal results given")
    y = np.asarray(y_obs, dtype=float)
    covered = np.stack([(y >= r.lo) & (y <= r.hi) for r in results])
    widths = np.stack([r.width for r in results])
    coverage = covered.mean(axis=0)
    adaptivity = widths.mean(axis=0)
    return CoverageAdaptivity(
        coverage, adaptivity, six_number(coverage), six_number(adaptivity)
    )
