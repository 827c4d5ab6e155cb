"""Run configuration: defaults, YAML loading, validation, hashing.

Every tunable of every stage appears in the default tree with an explicit
value, so a resolved configuration (and the manifest derived from it) always
records the constants that produced a run. User files are deep-merged onto
the defaults; unknown keys are rejected to catch typos early.
"""

from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import yaml

from .conformal import BatchSpec
from .data import DEFAULT_INDICATORS, Domain, IndicatorSpec, SynthParams
from .errors import ConfigError
from .indices import Direction
from .sampler import AnnealingSchedule, ChainConfig, CoolingMode, Engine

DEFAULT_CONFIG: dict = {
    "seed": 20240810,
    "out": "runs/default",
    "workers": 1,
    "engines": ["ising", "langevin"],
    "dataset": {
        "path": None,  # null -> synthesize from the synth section
        "delimiter": ",",
        "unit_id_column": "unit_id",
        "target_column": "target",
        "center_periph_column": "center_periph",
    },
    "synth": {
        "n_units": 400,
        "seed": None,  # null -> derived from the global seed
        "profile_weights": None,
        "group_correlation": 0.45,
        "cross_correlation": 0.2,
        "mirror_groups": [["MPI6", "MPI1"]],
        "target_base_percent": 8.0,
        "target_slope": 0.9,
        "target_noise_sd": 0.35,
        "center_hub_frac": 0.85,
    },
    "indicators": None,  # null -> built-in indicator table
    "indices": {
        "ddof": 1,                    # sample-sd convention everywhere
        "directions": {},             # per-index override; default negative
        "truncate_components": None,  # null keeps all components
    },
    "model": {
        "lambda_reg": 1.0,    # quadratic penalty in the [-1, 1] domain
        "temperature": None,  # null -> final chain temperature in likelihood ratios
    },
    "ising": {
        "domain": "ising",
        "n_iters": 10000,
        "burn_in_frac": 0.10,
        "thin": 5,
        "retain_last": 1200,
        "k_chains": 2,
        "seed": None,
        "lambda_reg": None,  # null -> model.lambda_reg
        "energy_stride": 10,
        "schedule": {
            "t0": 1.0,
            "cooling": 0.999,
            "t_min": 0.001,
            "mode": "on_accept",
            # small steps keep the annealed exploration local to the
            # reference configuration at the desk-scale iteration budget
            "proposal_sd": 0.005,
            "dt0": 0.0001,
        },
    },
    "langevin": {
        "domain": "raw",
        "n_iters": 20000,
        "burn_in_frac": 0.10,
        "thin": 10,
        "retain_last": 1500,
        "k_chains": 2,
        "seed": None,
        # "auto" -> largest clique eigenvalue + 1, which keeps the raw-domain
        # energy bounded below and the Euler-Maruyama step stable
        "lambda_reg": "auto",
        "energy_stride": 10,
        "schedule": {
            "t0": 1.0,
            "cooling": 0.9995,
            "t_min": 0.001,
            "mode": "per_step",
            "proposal_sd": 0.05,
            # smaller than the library default on purpose: keeps the
            # annealed trajectories local to the reference configuration
            "dt0": 1e-06,
        },
    },
    "conformal": {
        "n_total": 2000,
        "n_batches": 1000,
        "batch_size": 100,
        "alpha": 0.05,
        "calib_frac": 0.5,
        "seed": None,
        "repeats": 20,
        "estimate_last_n": None,  # null -> n_total
    },
}

# sections whose values are free-form and not key-checked against defaults
_OPEN_SECTIONS = {
    ("synth", "profile_weights"),
    ("indices", "directions"),
}

_SEED_OFFSETS = {"synth": 1, "ising": 101, "langevin": 202, "conformal": 307}


def _merge(base: dict, override: dict, path: tuple = ()) -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        if key not in base:
            dotted = ".".join((*path, str(key)))
            raise ConfigError(f"unknown configuration key {dotted!r}")
        if (
            isinstance(base[key], dict)
            and isinstance(value, dict)
            and (*path, key) not in _OPEN_SECTIONS
        ):
            out[key] = _merge(base[key], value, (*path, key))
        else:
            out[key] = copy.deepcopy(value)
    return out


@dataclass
class RunConfig:
    """A fully-resolved configuration tree with typed accessors."""

    raw: dict

    # -- plain fields ------------------------------------------------------
    @property
    def seed(self) -> int:
        return int(self.raw["seed"])

    @property
    def out(self) -> Path:
        return Path(self.raw["out"])

    @property
    def workers(self) -> int:
        return int(self.raw["workers"])

    @property
    def engines(self) -> list[Engine]:
        return [Engine(e) for e in self.raw["engines"]]

    @property
    def dataset_path(self):
        return self.raw["dataset"]["path"]

    @property
    def dataset_options(self) -> dict:
        d = self.raw["dataset"]
        return {
            "delimiter": d["delimiter"],
            "unit_id_column": d["unit_id_column"],
            "target_column": d["target_column"],
            "center_periph_column": d["center_periph_column"],
        }

    # -- typed sections ----------------------------------------------------
    def indicator_spec(self) -> list[IndicatorSpec]:
        table = self.raw["indicators"]
        if table is None:
            return list(DEFAULT_INDICATORS)
        return [
            IndicatorSpec(str(row["name"]), int(row["polarity"]), str(row["group"]))
            for row in table
        ]

    def synth_params(self) -> SynthParams:
        s = self.raw["synth"]
        weights = s["profile_weights"]
        if weights is not None:
            weights = {k: tuple(float(x) for x in v) for k, v in weights.items()}
        return SynthParams(
            indicators=tuple(self.indicator_spec()),
            profile_weights=weights,
            group_correlation=s["group_correlation"],
            cross_correlation=float(s["cross_correlation"]),
            mirror_groups=tuple((str(a), str(b)) for a, b in s["mirror_groups"]),
            target_base_percent=float(s["target_base_percent"]),
            target_slope=float(s["target_slope"]),
            target_noise_sd=float(s["target_noise_sd"]),
            center_hub_frac=float(s["center_hub_frac"]),
        )

    @property
    def synth_units(self) -> int:
        return int(self.raw["synth"]["n_units"])

    @property
    def synth_seed(self) -> int:
        return int(self.raw["synth"]["seed"])

    def directions(self) -> dict[str, Direction]:
        return {k: Direction(v) for k, v in self.raw["indices"]["directions"].items()}

    @property
    def indices_ddof(self) -> int:
        return int(self.raw["indices"]["ddof"])

    @property
    def truncate_components(self):
        value = self.raw["indices"]["truncate_components"]
        return None if value is None else int(value)

    def domain(self, engine: Engine) -> Domain:
        return Domain(self.raw[engine.value]["domain"])

    def schedule(self, engine: Engine) -> AnnealingSchedule:
        s = self.raw[engine.value]["schedule"]
        return AnnealingSchedule(
            t0=float(s["t0"]),
            cooling=float(s["cooling"]),
            t_min=float(s["t_min"]),
            mode=CoolingMode(s["mode"]),
            dt0=float(s["dt0"]),
            proposal_sd=float(s["proposal_sd"]),
        )

    def chain_config(self, engine: Engine) -> ChainConfig:
        e = self.raw[engine.value]
        return ChainConfig(
            engine=engine,
            n_iters=int(e["n_iters"]),
            burn_in_frac=float(e["burn_in_frac"]),
            thin=int(e["thin"]),
            retain_last=int(e["retain_last"]),
            seed=int(e["seed"]),
            schedule=self.schedule(engine),
            energy_stride=int(e["energy_stride"]),
        )

    def k_chains(self, engine: Engine) -> int:
        return int(self.raw[engine.value]["k_chains"])

    def lambda_override(self, engine: Engine):
        """Regularization weight for an engine; None means resolve at runtime.

        Explicit numbers win; null falls back to model.lambda_reg; the
        string "auto" requests the clique-spectrum rule resolved against the
        actual graph (largest clique eigenvalue + 1).
        """
        value = self.raw[engine.value]["lambda_reg"]
        if value is None:
            value = self.raw["model"]["lambda_reg"]
        if value == "auto":
            return None
        return float(value)

    @property
    def likelihood_temperature(self):
        value = self.raw["model"]["temperature"]
        return None if value is None else float(value)

    def batch_spec(self) -> BatchSpec:
        c = self.raw["conformal"]
        return BatchSpec(
            n_total=int(c["n_total"]),
            n_batches=int(c["n_batches"]),
            batch_size=int(c["batch_size"]),
            alpha=float(c["alpha"]),
            calib_frac=float(c["calib_frac"]),
            seed=int(c["seed"]),
            repeats=int(c["repeats"]),
        )

    @property
    def estimate_last_n(self) -> int:
        value = self.raw["conformal"]["estimate_last_n"]
        return int(self.raw["conformal"]["n_total"] if value is None else value)


def resolve_config(tree: dict) -> RunConfig:
    """Fill derived values (per-stage seeds) and validate every section."""
    tree = copy.deepcopy(tree)
    base_seed = int(tree["seed"])
    for section, offset in _SEED_OFFSETS.items():
        if tree[section].get("seed") is None:
            tree[section]["seed"] = base_seed + offset
    cfg = RunConfig(tree)
    _validate(cfg)
    return cfg


def _validate(cfg: RunConfig) -> None:
    engines = cfg.engines
    if not engines:
        raise ConfigError("engines: at least one engine must be enabled")
    try:
        cfg.indicator_spec()
        cfg.synth_params()
        cfg.directions()
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"indicators/synth: {exc}") from exc
    try:
        spec = cfg.batch_spec()
    except ConfigError as exc:
        raise ConfigError(f"conformal: {exc}") from exc
    for engine in engines:
        try:
            chain = cfg.chain_config(engine)
        except ConfigError as exc:
            raise ConfigError(f"{engine.value}: {exc}") from exc
        pooled = chain.retain_last * cfg.k_chains(engine)
        if spec.n_total > pooled:
            raise ConfigError(
                f"conformal: BatchSpec n_total={spec.n_total} exceeds the pooled "
                f"retained pool {pooled} of engine {engine.value} "
                f"(k_chains x retain_last)"
            )
        if cfg.estimate_last_n > pooled:
            raise ConfigError(
                f"conformal: estimate_last_n={cfg.estimate_last_n} exceeds the "
                f"pooled retained pool {pooled} of engine {engine.value}"
            )
    if cfg.estimate_last_n > spec.n_total:
        raise ConfigError(
            f"conformal: estimate_last_n={cfg.estimate_last_n} exceeds "
            f"n_total={spec.n_total} (the estimation pool is the last n_total "
            f"retained configurations)"
        )
        try:
            lam = cfg.lambda_override(engine)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{engine.value}: bad lambda_reg: {exc}") from exc
        if lam is not None and not lam > 0:
            raise ConfigError(f"{engine.value}: lambda_reg must be > 0")
    if cfg.workers < 1:
        raise ConfigError("workers must be >= 1")
    if cfg.dataset_path is None and cfg.synth_units < 2:
        raise ConfigError("synth: n_units must be >= 2")


def load_config(path=None, overrides: dict | None = None) -> RunConfig:
    """Load a YAML file (optional), merge onto defaults, resolve and validate.

    ``overrides`` maps top-level keys (seed, out, engines, workers) supplied
    on the command line over the file values.
    """
    tree = copy.deepcopy(DEFAULT_CONFIG)
    if path is not None:
        text = Path(path).read_text(encoding="utf-8")
        user = yaml.safe_load(text)
        if user is None:
            user = {}
        if not isinstance(user, dict):
            raise ConfigError(f"config file {path} must contain a mapping")
        tree = _merge(tree, user)
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key not in tree:
            raise ConfigError(f"unknown override {key!r}")
        tree[key] = value
    return resolve_config(tree)


def manifest_config(cfg: RunConfig) -> dict:
    """The resolved tree without the output directory, which determines
    every numeric artifact (the directory itself is environmental)."""
    tree = copy.deepcopy(cfg.raw)
    tree.pop("out", None)
    return tree


def config_hash(cfg: RunConfig) -> str:
    """Stable digest of the numeric-output-determining configuration."""
    canonical = json.dumps(manifest_config(cfg), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def dump_default_config() -> str:
    """The full default configuration as a YAML document."""
    return yaml.safe_dump(DEFAULT_CONFIG, sort_keys=False)
