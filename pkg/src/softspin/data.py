"""Unit-level dataset: loading, validation, target scaling, synthetic generation.

A record describes one territorial unit: an opaque id, a five-attribute
categorical profile (ALT, POP, SUP, CLITO, DEGURB), a set of real-valued
base indicators grouped into composite indices, and an observed target
expressed as a percentage in [0, 100]. Records with any missing required
value are rejected at load time, never imputed. The record order of the
input file is the canonical unit ordering used by every downstream vector
and matrix.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .errors import (
    BadCategory,
    DataError,
    DuplicateUnitId,
    MissingColumn,
    TargetOutOfRange,
)

PROFILE_COLUMNS = ("ALT", "POP", "SUP", "CLITO", "DEGURB")

PROFILE_DOMAINS: Mapping[str, tuple[int, ...]] = {
    "ALT": (1, 2, 3),
    "POP": (1, 2, 3),
    "SUP": (1, 2, 3),
    "CLITO": (0, 1),
    "DEGURB": (1, 2, 3),
}

CENTER_PERIPH_LABELS = ("CentrHub", "PeriphArea")


class Domain(str, Enum):
    """Scale on which a simulation engine represents the target variable."""

    ISING_SCALED = "ising"  # percent mapped affinely into [-1, +1]
    RAW_PERCENT = "raw"     # original percent scale [0, 100]


DOMAIN_BOUNDS = {
    Domain.ISING_SCALED: (-1.0, 1.0),
    Domain.RAW_PERCENT: (0.0, 100.0),
}


@dataclass(frozen=True)
class IndicatorSpec:
    """One base indicator: its name, polarity (+1/-1) and composite group."""

    name: str
    polarity: int
    group: str

    def __post_init__(self):
        if self.polarity not in (1, -1):
            raise DataError(f"indicator {self.name!r}: polarity must be +1 or -1")


# Default indicator table: six composite groups covering demography,
# education, income, employment, attractiveness and mobility.
DEFAULT_INDICATORS: tuple[IndicatorSpec, ...] = (
    IndicatorSpec("PERC_ANZIANI", -1, "MPI1"),
    IndicatorSpec("PERC_GIOVANI", +1, "MPI1"),
    IndicatorSpec("PERC_FAMIGLIE_MINORI", +1, "MPI1"),
    IndicatorSpec("PERC_FAM_UNIPERSONALI_ANZIANI", -1, "MPI1"),
    IndicatorSpec("PERC_NEET", -1, "MPI2"),
    IndicatorSpec("PERC_LAUREATI", +1, "MPI2"),
    IndicatorSpec("PERC_DIPLOMATI", +1, "MPI2"),
    IndicatorSpec("REDDITO_MEDIANO_EQUIVALENTE", +1, "MPI3"),
    IndicatorSpec("PERC_WORKINGPOOR", -1, "MPI3"),
    IndicatorSpec("PERC_PRECARI", -1, "MPI4"),
    IndicatorSpec("PERC_OCCUPATI", +1, "MPI4"),
    IndicatorSpec("PERC_FAM_BASSA_INTLAV", -1, "MPI4"),
    IndicatorSpec("I_ATTRAZIONE", +1, "MPI5"),
    IndicatorSpec("I_AUTOCONTENIMENTO", +1, "MPI5"),
    IndicatorSpec("I_COESISTENZA", +1, "MPI5"),
    IndicatorSpec("STA", -1, "MPI6"),
    IndicatorSpec("D_INT", -1, "MPI6"),
    IndicatorSpec("D_EST_USCITA", +1, "MPI6"),
    IndicatorSpec("D_EST_ENTRATA", +1, "MPI6"),
)


def indicator_groups(spec: Sequence[IndicatorSpec]) -> dict[str, list[IndicatorSpec]]:
    """Group the indicator table by composite index, in first-appearance order."""
    groups: dict[str, list[IndicatorSpec]] = {}
    for item in spec:
        groups.setdefault(item.group, []).append(item)
    return groups


@dataclass(frozen=True)
class UnitRecord:
    unit_id: str
    profile: tuple[int, int, int, int, int]
    indicators: Mapping[str, float]
    target_observed: float
    center_periph: str | None = None


@dataclass
class Dataset:
    """Ordered collection of unit records plus the indicator table.

    ``scale_domain`` records the scale of ``target_observed`` values; loaded
    and synthesized datasets always carry raw percents, and scaling into the
    simulation domain happens lazily through :func:`scale_target`.
    """

    records: list[UnitRecord]
    spec: list[IndicatorSpec]
    scale_domain: Domain = Domain.RAW_PERCENT

    def __post_init__(self):
        seen = set()
        for rec in self.records:
            if rec.unit_id in seen:
                raise DuplicateUnitId(rec.unit_id)
            seen.add(rec.unit_id)

    @property
    def n(self) -> int:
        return len(self.records)

    @property
    def unit_ids(self) -> list[str]:
        return [rec.unit_id for rec in self.records]

    @property
    def indicator_names(self) -> list[str]:
        return [item.name for item in self.spec]

    def indicator_matrix(self) -> np.ndarray:
        """N x M matrix of base indicators, columns in spec order."""
        names = self.indicator_names
        return np.array(
            [[rec.indicators[name] for name in names] for rec in self.records],
            dtype=float,
        )

    def target(self) -> np.ndarray:
        return np.array([rec.target_observed for rec in self.records], dtype=float)

    def profiles(self) -> np.ndarray:
        return np.array([rec.profile for rec in self.records], dtype=int)

    def profile_column(self, attribute: str) -> np.ndarray:
        if attribute not in PROFILE_COLUMNS:
            raise DataError(f"unknown territorial attribute {attribute!r}")
        k = PROFILE_COLUMNS.index(attribute)
        return self.profiles()[:, k]

    def center_periph_labels(self) -> list[str]:
        """Descriptive type label per unit; 'All' when the column is absent."""
        return [rec.center_periph or "All" for rec in self.records]


@dataclass
class LoadResult:
    """A validated dataset plus the rejection count reported separately."""

    dataset: Dataset
    n_rejected: int
    rejected_rows: list[int] = field(default_factory=list)


def _is_missing(value) -> bool:
    return value is None or str(value).strip() == ""


def _parse_int(raw, row, column):
    try:
        value = int(str(raw).strip())
    except ValueError:
        raise BadCategory(row, column, raw) from None
    return value


def _parse_float(raw, row, column):
    try:
        value = float(str(raw).strip())
    except ValueError:
        raise DataError(f"row {row}: column {column!r} is not a number: {raw!r}") from None
    if not math.isfinite(value):
        raise DataError(f"row {row}: column {column!r} is not finite: {raw!r}")
    return value


def load_dataset(
    path,
    spec: Sequence[IndicatorSpec] = DEFAULT_INDICATORS,
    *,
    delimiter: str = ",",
    unit_id_column: str = "unit_id",
    target_column: str = "target",
    center_periph_column: str = "center_periph",
) -> LoadResult:
    """Load a delimited text file of unit records.

    The header must name the unit id column, the five profile columns, every
    indicator of ``spec`` and the target column; a center/periphery column is
    optional. Rows with an empty required cell are rejected (counted, not
    fatal); rows with out-of-domain categories, out-of-range targets or
    duplicate ids raise. Row numbers in errors are 1-based data rows.
    """
    spec = list(spec)
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh, delimiter=delimiter)
        header = reader.fieldnames or []
        required = [unit_id_column, *PROFILE_COLUMNS]
        required += [item.name for item in spec]
        required.append(target_column)
        for name in required:
            if name not in header:
                raise MissingColumn(name)
        has_type = center_periph_column in header

        records: list[UnitRecord] = []
        seen_ids: set[str] = set()
        rejected: list[int] = []
        for row_no, row in enumerate(reader, start=1):
            if any(_is_missing(row.get(name)) for name in required):
                rejected.append(row_no)
                continue
            unit_id = str(row[unit_id_column]).strip()
            profile = []
            for col in PROFILE_COLUMNS:
                value = _parse_int(row[col], row_no, col)
                if value not in PROFILE_DOMAINS[col]:
                    raise BadCategory(row_no, col, row[col])
                profile.append(value)
            indicators = {
                item.name: _parse_float(row[item.name], row_no, item.name)
                for item in spec
            }
            target = _parse_float(row[target_column], row_no, target_column)
            if not 0.0 <= target <= 100.0:
                raise TargetOutOfRange(row_no, target)
            center_periph = None
            if has_type and not _is_missing(row.get(center_periph_column)):
                label = str(row[center_periph_column]).strip()
                if label not in CENTER_PERIPH_LABELS:
                    raise BadCategory(row_no, center_periph_column, label)
                center_periph = label
            if unit_id in seen_ids:
                raise DuplicateUnitId(unit_id)
            seen_ids.add(unit_id)
            records.append(
                UnitRecord(unit_id, tuple(profile), indicators, target, center_periph)
            )

    dataset = Dataset(records, spec)
    return LoadResult(dataset, len(rejected), rejected)


def save_dataset(
    dataset: Dataset,
    path,
    *,
    delimiter: str = ",",
    unit_id_column: str = "unit_id",
    target_column: str = "target",
    center_periph_column: str = "center_periph",
) -> Path:
    """Write a dataset back to delimited text at full float precision."""
    path = Path(path)
    names = dataset.indicator_names
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, delimiter=delimiter, lineterminator="\n")
        writer.writerow(
            [unit_id_column, *PROFILE_COLUMNS, *names, target_column, center_periph_column]
        )
        for rec in dataset.records:
            writer.writerow(
                [
                    rec.unit_id,
                    *rec.profile,
                    *(repr(rec.indicators[name]) for name in names),
                    repr(rec.target_observed),
                    rec.center_periph or "",
                ]
            )
    return path


def scale_values(y, domain: Domain) -> np.ndarray:
    """Map raw percent values into the given simulation domain."""
    y = np.asarray(y, dtype=float)
    if domain is Domain.ISING_SCALED:
        return y / 50.0 - 1.0
    return y.copy()


def unscale_values(s, domain: Domain) -> np.ndarray:
    """Inverse of :func:`scale_values`; returns raw percent values."""
    s = np.asarray(s, dtype=float)
    if domain is Domain.ISING_SCALED:
        return 50.0 * (s + 1.0)
    return s.copy()


def scale_target(dataset: Dataset, domain: Domain) -> np.ndarray:
    """Reference configuration of the system in the requested domain."""
    return scale_values(dataset.target(), domain)


# ---------------------------------------------------------------------------
# Synthetic generation

DEFAULT_PROFILE_WEIGHTS: Mapping[str, tuple[float, ...]] = {
    "ALT": (0.62, 0.20, 0.18),
    "POP": (0.75, 0.23, 0.02),
    "SUP": (0.17, 0.66, 0.17),
    "CLITO": (0.97, 0.03),
    "DEGURB": (0.02, 0.37, 0.61),
}


@dataclass(frozen=True)
class SynthParams:
    """Knobs of the synthetic dataset generator.

    ``group_correlation`` sets the common correlation of indicators within a
    composite group (a scalar, or a per-group mapping; 1.0 makes the group's
    indicators perfectly correlated). ``mirror_groups`` lists (copy, source)
    pairs of groups whose indicators are exact sign-matched copies, which
    makes the two composite columns identical; the default reproduces the
    exact collinearity between the first and last composite that drives the
    rank-deficiency handling downstream. The target is a logistic transform
    of a latent factor common to all groups plus noise, so it is a noisy
    monotone function of the latent socio-economic signal.
    """

    indicators: tuple[IndicatorSpec, ...] = DEFAULT_INDICATORS
    profile_weights: Mapping[str, tuple[float, ...]] | None = None
    group_correlation: float | Mapping[str, float] = 0.45
    cross_correlation: float = 0.2
    mirror_groups: tuple[tuple[str, str], ...] = (("MPI6", "MPI1"),)
    target_base_percent: float = 8.0
    target_slope: float = 0.9
    target_noise_sd: float = 0.35
    center_hub_frac: float = 0.85

    def weights_for(self, column: str) -> tuple[float, ...]:
        table = self.profile_weights or DEFAULT_PROFILE_WEIGHTS
        w = np.asarray(table[column], dtype=float)
        if len(w) != len(PROFILE_DOMAINS[column]) or w.min() < 0:
            raise DataError(f"bad profile weights for {column!r}")
        return tuple(w / w.sum())

    def correlation_for(self, group: str) -> float:
        if isinstance(self.group_correlation, Mapping):
            c = float(self.group_correlation.get(group, 0.45))
        else:
            c = float(self.group_correlation)
        if not 0.0 <= c <= 1.0:
            raise DataError(f"group correlation for {group!r} must be in [0, 1]")
        return c


def synth_dataset(
    n_units: int, seed: int, params: SynthParams = SynthParams()
) -> Dataset:
    """Generate a deterministic synthetic dataset of ``n_units`` records.

    Pure function of (n_units, seed, params): profiles are drawn from the
    configured category frequencies, indicators from a one-factor-per-group
    model with a shared latent factor across groups, and the observed target
    from a logistic link on that latent signal.
    """
    if n_units < 2:
        raise DataError("n_units must be >= 2")
    rng = np.random.default_rng(seed)
    spec = list(params.indicators)
    groups = indicator_groups(spec)

    profiles = {
        col: rng.choice(PROFILE_DOMAINS[col], size=n_units, p=params.weights_for(col))
        for col in PROFILE_COLUMNS
    }

    shared = rng.standard_normal(n_units)
    cc = math.sqrt(params.cross_correlation)
    cres = math.sqrt(1.0 - params.cross_correlation)
    factors = {
        g: cc * shared + cres * rng.standard_normal(n_units) for g in groups
    }

    mirrored = {dst: src for dst, src in params.mirror_groups}
    columns: dict[str, np.ndarray] = {}
    for g, items in groups.items():
        if g in mirrored:
            continue
        c = params.correlation_for(g)
        load, res = math.sqrt(c), math.sqrt(1.0 - c)
        for k, item in enumerate(items):
            base = item.polarity * (load * factors[g]) + res * rng.standard_normal(n_units)
            loc = 20.0 + 7.0 * k
            scale = 3.0 + 0.5 * k
            columns[item.name] = loc + scale * base
    for dst, src in mirrored.items():
        src_items, dst_items = groups.get(src), groups.get(dst)
        if src_items is None or dst_items is None or len(src_items) != len(dst_items):
            raise DataError(f"cannot mirror group {dst!r} from {src!r}")
        for s_item, d_item in zip(src_items, dst_items):
            # sign-matched copy keeps the standardized columns identical
            columns[d_item.name] = (
                s_item.polarity * d_item.polarity * columns[s_item.name]
            )

    latent = sum(factors[g] for g in groups) / len(groups)
    latent = (latent - latent.mean()) / (latent.std() + 1e-12)
    b0 = math.log(params.target_base_percent / (100.0 - params.target_base_percent))
    logit = b0 + params.target_slope * latent
    logit = logit + params.target_noise_sd * rng.standard_normal(n_units)
    target = 100.0 / (1.0 + np.exp(-logit))

    hub = rng.random(n_units) < params.center_hub_frac
    width = len(str(n_units))
    records = [
        UnitRecord(
            unit_id=f"U{i + 1:0{width}d}",
            profile=tuple(int(profiles[col][i]) for col in PROFILE_COLUMNS),
            indicators={name: float(columns[name][i]) for name in (it.name for it in spec)},
            target_observed=float(target[i]),
            center_periph=CENTER_PERIPH_LABELS[0] if hub[i] else CENTER_PERIPH_LABELS[1],
        )
        for i in range(n_units)
    ]
    return Dataset(records, spec)
