"""Composite indices and the PCA-derived external field.

Base indicators are standardized to mean 100 / sd 10 with their polarity,
aggregated per group into a dispersion-penalizing composite, and the
composite matrix is reduced through correlation-matrix PCA. The external
field driving the spin system is the eigenvalue-weighted sum of component
scores, with weights normalized to one so that rank-deficient components
contribute nothing.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
import numpy as np

from .data import Dataset, indicator_groups
from .errors import DataError, DegenerateRow, ZeroVariance


class Direction(str, Enum):
    """Sign of the dispersion penalty of a composite index."""

    POSITIVE = "positive"  # mean + dispersion penalty
    NEGATIVE = "negative"  # mean - dispersion penalty (default)


@dataclass(frozen=True)
class StandardizationStats:
    """Per-indicator mean and standard deviation used for the z-scores."""

    names: tuple[str, ...]
    mean: np.ndarray
    sd: np.ndarray
    ddof: int = 1


def _column_sd(x: np.ndarray, ddof: int) -> float:
    if x.shape[0] <= ddof:
        raise ZeroVariance("column with too few values")
    if np.ptp(x) == 0.0:  # constant column, exact zero regardless of rounding
        return 0.0
    return float(np.std(x, ddof=ddof))


def standardize(column, polarity: int, *, ddof: int = 1, name: str = "column") -> np.ndarray:
    """Polarity-signed z-scores rescaled to mean 100 and sd 10.

    ``ddof=1`` (sample convention) is the package-wide default; ``ddof=0``
    selects the population convention.
    """
    x = np.asarray(column, dtype=float)
    if polarity not in (1, -1):
        raise DataError(f"{name!r}: polarity must be +1 or -1")
    sd = _column_sd(x, ddof)
    if sd == 0.0:
        raise ZeroVariance(name)
    return 10.0 * polarity * (x - x.mean()) / sd + 100.0


def mpi(z_block, direction: Direction = Direction.NEGATIVE, *, ddof: int = 1) -> np.ndarray:
    """Dispersion-penalized composite of a standardized indicator block.

    Each unit's score is the row mean of its standardized profile, shifted
    by the squared row dispersion divided by the mean; the sign of the shift
    is the index direction. A single-indicator block has zero dispersion and
    the composite equals the z-score column.
    """
    z = np.atleast_2d(np.asarray(z_block, dtype=float))
    if z.ndim != 2 or z.shape[1] < 1:
        raise DataError("z block must be an N x M matrix with M >= 1")
    m = z.mean(axis=1)
    bad = np.nonzero(m == 0.0)[0]
    if bad.size:
        raise DegenerateRow(int(bad[0]))
    if z.shape[1] == 1:
        s2 = np.zeros_like(m)
    else:
        s2 = np.var(z, axis=1, ddof=ddof)
    penalty = s2 / m
    if direction is Direction.POSITIVE:
        return m + penalty
    return m - penalty


@dataclass
class CompositeMatrix:
    """N x K matrix of composite indices plus construction metadata."""

    values: np.ndarray
    index_names: tuple[str, ...]
    directions: tuple[Direction, ...]
    stats: StandardizationStats

    @property
    def k(self) -> int:
        return self.values.shape[1]


def build_composites(
    dataset: Dataset,
    *,
    directions: dict[str, Direction] | None = None,
    ddof: int = 1,
) -> CompositeMatrix:
    """Standardize the base indicators and aggregate them group by group."""
    directions = directions or {}
    x = dataset.indicator_matrix()
    spec = dataset.spec
    groups = indicator_groups(spec)
    names = dataset.indicator_names

    mean = x.mean(axis=0)
    sd = np.array([_column_sd(x[:, j], ddof) for j in range(x.shape[1])])
    for j, name in enumerate(names):
        if sd[j] == 0.0:
            raise ZeroVariance(name)
    stats = StandardizationStats(tuple(names), mean, sd, ddof)

    z = {
        item.name: standardize(x[:, names.index(item.name)], item.polarity,
                               ddof=ddof, name=item.name)
        for item in spec
    }
    index_names = tuple(groups)
    dirs = tuple(directions.get(g, Direction.NEGATIVE) for g in index_names)
    values = np.column_stack(
        [
            mpi(np.column_stack([z[item.name] for item in groups[g]]), d, ddof=ddof)
            for g, d in zip(index_names, dirs)
        ]
    )
    return CompositeMatrix(values, index_names, dirs, stats)


def _as_matrix(c) -> tuple[np.ndarray, tuple[str, ...]]:
    if isinstance(c, CompositeMatrix):
        return np.asarray(c.values, dtype=float), c.index_names
    x = np.asarray(c, dtype=float)
    return x, tuple(f"C{j + 1}" for j in range(x.shape[1]))


def correlation_matrix(composite, *, ddof: int = 1) -> np.ndarray:
    """Pearson correlation matrix of the composite columns."""
    x, names = _as_matrix(composite)
    sd = np.array([_column_sd(x[:, j], ddof) for j in range(x.shape[1])])
    for j, s in enumerate(sd):
        if s == 0.0:
            raise ZeroVariance(names[j])
    z = (x - x.mean(axis=0)) / sd
    r = z.T @ z / (x.shape[0] - ddof)
    r = np.clip((r + r.T) / 2.0, -1.0, 1.0)
    np.fill_diagonal(r, 1.0)
    return r


def jacobi_eigh(a, *, tol: float = 1e-12, max_sweeps: int = 60) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.

    Returns (eigenvalues, eigenvectors) in unsorted order; convergence means
    every off-diagonal magnitude is at most ``tol``. Adequate for the small
    matrices used here (K <= 10).
    """
    a = np.array(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DataError("matrix must be square")
    if not np.allclose(a, a.T, atol=1e-10):
        raise DataError("matrix must be symmetric")
    k = a.shape[0]
    v = np.eye(k)
    if k == 1:
        return np.diag(a).copy(), v
    for _ in range(max_sweeps):
        off = np.max(np.abs(a - np.diag(np.diag(a))))
        if off <= tol:
            break
        for p in range(k - 1):
            for q in range(p + 1, k):
                apq = a[p, q]
                if abs(apq) <= tol:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = np.sign(theta) / (abs(theta) + np.hypot(theta, 1.0))
                if theta == 0.0:
                    t = 1.0
                c = 1.0 / np.hypot(t, 1.0)
                s = t * c
                rot_p = c * a[:, p] - s * a[:, q]
                rot_q = s * a[:, p] + c * a[:, q]
                a[:, p], a[:, q] = rot_p, rot_q
                rot_p = c * a[p, :] - s * a[q, :]
                rot_q = s * a[p, :] + c * a[q, :]
                a[p, :], a[q, :] = rot_p, rot_q
                a[p, q] = a[q, p] = 0.0
                rot_p = c * v[:, p] - s * v[:, q]
                rot_q = s * v[:, p] + c * v[:, q]
                v[:, p], v[:, q] = rot_p, rot_q
    else:
        raise DataError("Jacobi eigen-decomposition did not converge")
    return np.diag(a).copy(), v


@dataclass
class PCASummary:
    """Correlation-matrix PCA of the composite indices.

    ``loadings`` columns are orthonormal components, ``eigenvalues`` descend,
    ``proportions`` are the eigenvalues normalized to sum one, and ``scores``
    are the projections of the column-standardized composites. Components are
    sign-fixed so the largest-magnitude loading of each column is positive,
    recorded in ``sign_flipped``.
    """

    loadings: np.ndarray
    eigenvalues: np.ndarray
    proportions: np.ndarray
    scores: np.ndarray
    index_names: tuple[str, ...]
    sign_flipped: np.ndarray

    @property
    def cumulative(self) -> np.ndarray:
        return np.cumsum(self.proportions)

    @property
    def standard_deviations(self) -> np.ndarray:
        return np.sqrt(self.eigenvalues)


def pca(composite, *, ddof: int = 1) -> PCASummary:
    """PCA on the column-standardized composite matrix.

    Rank deficiency is not an error: an exactly collinear column pair yields
    one zero eigenvalue, carried along with zero weight. Requires N > K.
    """
    x, names = _as_matrix(composite)
    n, k = x.shape
    if n <= k:
        raise DataError(f"PCA needs more rows than columns (N={n}, K={k})")
    sd = np.array([_column_sd(x[:, j], ddof) for j in range(k)])
    for j, s in enumerate(sd):
        if s == 0.0:
            raise ZeroVariance(names[j])
    z = (x - x.mean(axis=0)) / sd
    r = z.T @ z / (n - ddof)
    r = np.clip((r + r.T) / 2.0, -1.0, 1.0)
    np.fill_diagonal(r, 1.0)

    w, v = jacobi_eigh(r)
    w = np.where(w < 0.0, 0.0, w)  # clip rounding noise below zero
    order = np.argsort(-w, kind="stable")
    w = w[order]
    v = v[:, order]

    flipped = np.zeros(k, dtype=bool)
    for j in range(k):
        lead = int(np.argmax(np.abs(v[:, j])))
        if v[lead, j] < 0.0:
            v[:, j] = -v[:, j]
            flipped[j] = True

    proportions = w / w.sum()
    scores = z @ v
    return PCASummary(v, w, proportions, scores, names, flipped)


@dataclass
class ExternalField:
    """Per-unit scalar drive of the spin system, with its PCA provenance."""

    h: np.ndarray
    provenance: PCASummary

    @property
    def weights(self) -> np.ndarray:
        w = self.provenance.eigenvalues
        return w / w.sum()


def external_field(summary: PCASummary, n_components: int | None = None) -> ExternalField:
    """Eigenvalue-weighted sum of the component scores (weights sum to one).

    All components are kept by default; zero-eigenvalue components carry
    zero weight anyway. ``n_components`` truncates to the leading components,
    renormalizing the weights over the kept ones.
    """
    w = summary.eigenvalues.copy()
    if n_components is not None:
        if not 1 <= n_components <= w.shape[0]:
            raise DataError("n_components out of range")
        w[n_components:] = 0.0
    weights = w / w.sum()
    return ExternalField(summary.scores @ weights, summary)
