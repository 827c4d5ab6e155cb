"""Stage orchestration: ingest, field, graph, simulate, conformal, analysis.

Every stage reads its inputs from disk and writes plain delimited or .npy
artifacts, so the full pipeline and the stage subcommands composed in order
produce identical bytes, and any run can be resumed or inspected mid-way.
The manifest written by the full pipeline records the resolved
configuration, its hash and the library versions, which together determine
every numeric output.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .analysis import (
    UnitResults,
    baseline_lm,
    compare,
    group_summaries,
    ols_standardized,
    residual_associations,
)
from .conformal import (
    batch_means,
    conformal_intervals,
    coverage_adaptivity,
    repeat_splits,
    six_number,
)
from .config import RunConfig, config_hash, manifest_config
from .data import (
    PROFILE_COLUMNS,
    Dataset,
    Domain,
    load_dataset,
    save_dataset,
    scale_target,
    synth_dataset,
    unscale_values,
)
from .energy import EnergyModel, SpinConfiguration, hamiltonian
from .errors import ConfigError, MissingArtifact
from .graph import build_graph, spectrum_extremes
from .indices import build_composites, correlation_matrix, external_field, pca
from .reports import (
    read_column,
    read_comparison,
    read_table,
    write_associations,
    write_benchmark,
    write_comparison,
    write_composites,
    write_energy_trace,
    write_external_field,
    write_field_diagnostics,
    write_graph_summary,
    write_group_mpi,
    write_group_summaries,
    write_group_table,
    write_json,
    write_ols,
    write_six_number_table,
    write_uncertainty_table,
    write_unit_results,
)
from .sampler import Engine, pooled_retained, run_parallel

STAGES = ("synth", "validate", "field", "graph", "simulate", "conformal", "analyze", "report")


def artifact(out: Path, name: str) -> Path:
    return Path(out) / name


def _require(path: Path, stage: str) -> Path:
    if not path.exists():
        raise MissingArtifact(stage, path)
    return path


def _load_dataset(cfg: RunConfig, out: Path) -> Dataset:
    if cfg.dataset_path is not None:
        path = _require(Path(cfg.dataset_path), "dataset")
    else:
        path = _require(artifact(out, "dataset.csv"), "synth")
    result = load_dataset(path, cfg.indicator_spec(), **cfg.dataset_options)
    return result.dataset


def _read_composites(cfg: RunConfig, out: Path):
    path = _require(artifact(out, "composites.csv"), "field")
    header, rows = read_table(path)
    names = tuple(header[1:])
    values = np.array([[float(v) for v in row[1:]] for row in rows])
    return values, names


def _read_field(cfg: RunConfig, out: Path) -> np.ndarray:
    path = _require(artifact(out, "external_field.csv"), "field")
    return read_column(path, "h")


def _resolve_lambda(cfg: RunConfig, engine: Engine, graph) -> float:
    lam = cfg.lambda_override(engine)
    if lam is None:
        lam_max, _ = spectrum_extremes(graph)
        lam = lam_max + 1.0
    return lam


# ---------------------------------------------------------------------------
# Stages

def stage_synth(cfg: RunConfig, out: Path) -> list[Path]:
    out.mkdir(parents=True, exist_ok=True)
    if cfg.dataset_path is not None:
        raise ConfigError("synth: dataset.path is set; nothing to synthesize")
    dataset = synth_dataset(cfg.synth_units, cfg.synth_seed, cfg.synth_params())
    opts = cfg.dataset_options
    path = save_dataset(
        dataset,
        artifact(out, "dataset.csv"),
        delimiter=opts["delimiter"],
        unit_id_column=opts["unit_id_column"],
        target_column=opts["target_column"],
        center_periph_column=opts["center_periph_column"],
    )
    return [path]


def stage_validate(cfg: RunConfig, out: Path) -> list[Path]:
    out.mkdir(parents=True, exist_ok=True)
    if cfg.dataset_path is not None:
        path = _require(Path(cfg.dataset_path), "dataset")
    else:
        path = _require(artifact(out, "dataset.csv"), "synth")
    result = load_dataset(path, cfg.indicator_spec(), **cfg.dataset_options)
    d = result.dataset
    lines = [
        f"source: {path.name}",
        f"accepted records: {d.n}",
        f"rejected records: {result.n_rejected}",
        f"rejected rows: {','.join(map(str, result.rejected_rows)) or '-'}",
        f"indicators: {len(d.spec)}",
        f"composite groups: {len({s.group for s in d.spec})}",
    ]
    report = artifact(out, "validation.txt")
    report.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return [report]


def stage_field(cfg: RunConfig, out: Path) -> list[Path]:
    out.mkdir(parents=True, exist_ok=True)
    dataset = _load_dataset(cfg, out)
    composites = build_composites(
        dataset, directions=cfg.directions(), ddof=cfg.indices_ddof
    )
    corr = correlation_matrix(composites, ddof=cfg.indices_ddof)
    summary = pca(composites, ddof=cfg.indices_ddof)
    field = external_field(summary, cfg.truncate_components)
    return [
        write_composites(artifact(out, "composites.csv"), dataset,
                         composites.values, composites.index_names),
        write_external_field(artifact(out, "external_field.csv"), dataset, field.h),
        write_field_diagnostics(artifact(out, "field_diagnostics.txt"), corr, summary),
    ]


def stage_graph(cfg: RunConfig, out: Path) -> list[Path]:
    out.mkdir(parents=True, exist_ok=True)
    dataset = _load_dataset(cfg, out)
    graph = build_graph(dataset)
    lam_max, lam_min = spectrum_extremes(graph)
    return [
        write_group_table(artifact(out, "groups.csv"), dataset, graph),
        write_graph_summary(artifact(out, "graph_summary.txt"), graph, lam_max, lam_min),
    ]


def stage_simulate(cfg: RunConfig, out: Path, engines=None) -> list[Path]:
    out.mkdir(parents=True, exist_ok=True)
    dataset = _load_dataset(cfg, out)
    field = _read_field(cfg, out)
    graph = build_graph(dataset)
    written: list[Path] = []
    for engine in engines or cfg.engines:
        lam = _resolve_lambda(cfg, engine, graph)
        model = EnergyModel(graph, field, lambda_reg=lam,
                            temperature=cfg.likelihood_temperature or 1.0)
        domain = cfg.domain(engine)
        s_ref = SpinConfiguration(scale_target(dataset, domain), domain)
        h_ref = hamiltonian(model, s_ref)
        chain_cfg = cfg.chain_config(engine)
        k = cfg.k_chains(engine)
        traces = run_parallel(model, chain_cfg, s_ref, k,
                              base_seed=chain_cfg.seed, workers=cfg.workers)
        for idx, trace in enumerate(traces):
            written.append(
                write_energy_trace(
                    artifact(out, f"trace_{engine.value}_{idx:02d}.csv"),
                    trace.energy_iterations, trace.energies,
                )
            )
        configs, iters, chains, energies = pooled_retained(traces)
        for name, arr in (
            ("configs", configs), ("iterations", iters),
            ("chains", chains), ("energies", energies),
        ):
            path = artifact(out, f"retained_{engine.value}_{name}.npy")
            np.save(path, arr)
            written.append(path)
        meta = {
            "engine": engine.value,
            "domain": domain.value,
            "n_units": dataset.n,
            "k_chains": k,
            "base_seed": chain_cfg.seed,
            "seeds": [t.seed for t in traces],
            "n_iters": chain_cfg.n_iters,
            "burn_in": traces[0].burn_in,
            "thin": chain_cfg.thin,
            "retain_last": chain_cfg.retain_last,
            "energy_stride": chain_cfg.energy_stride,
            "lambda_reg": lam,
            "schedule": {
                "t0": chain_cfg.schedule.t0,
                "cooling": chain_cfg.schedule.cooling,
                "t_min": chain_cfg.schedule.t_min,
                "mode": chain_cfg.schedule.mode.value,
                "proposal_sd": chain_cfg.schedule.proposal_sd,
                "dt0": chain_cfg.schedule.dt0,
            },
            "h_ref": h_ref,
            "final_temperatures": [t.final_temperature for t in traces],
            "accept_counts": [t.accept_count for t in traces],
        }
        written.append(write_json(artifact(out, f"retained_{engine.value}.json"), meta))
    return written


def _read_retained(out: Path, engine: Engine):
    meta_path = _require(artifact(out, f"retained_{engine.value}.json"), "simulate")
    meta = json.loads(meta_path.read_text(encoding="utf-8"))
    arrays = {}
    for name in ("configs", "iterations", "chains", "energies"):
        path = _require(artifact(out, f"retained_{engine.value}_{name}.npy"), "simulate")
        arrays[name] = np.load(path)
    return meta, arrays


def stage_conformal(cfg: RunConfig, out: Path, engines=None) -> list[Path]:
    out.mkdir(parents=True, exist_ok=True)
    dataset = _load_dataset(cfg, out)
    spec = cfg.batch_spec()
    y_obs = dataset.target()
    written: list[Path] = []
    for engine in engines or cfg.engines:
        meta, arrays = _read_retained(out, engine)
        domain = Domain(meta["domain"])
        pool = unscale_values(arrays["configs"], domain)
        if pool.shape[0] < spec.n_total:
            raise ConfigError(
                f"conformal: retained pool {pool.shape[0]} of engine "
                f"{engine.value} is smaller than n_total={spec.n_total}"
            )
        pool = pool[-spec.n_total:]
        y_est = pool[-cfg.estimate_last_n:].mean(axis=0)
        batches = batch_means(pool, spec)
        primary = conformal_intervals(batches, y_obs, spec)
        splits = repeat_splits(batches, y_obs, spec)
        summary = coverage_adaptivity(splits, y_obs)
        written += [
            write_uncertainty_table(
                artifact(out, f"uncertainty_{engine.value}.csv"),
                dataset.unit_ids, y_obs, y_est, primary.lo, primary.hi, primary.covered,
            ),
            write_unit_results(
                artifact(out, f"unit_results_{engine.value}.csv"),
                dataset.unit_ids, summary.coverage, summary.adaptivity,
            ),
            write_six_number_table(
                artifact(out, f"coverage_adaptivity_{engine.value}.csv"),
                {"coverage": summary.coverage_summary,
                 "adaptivity": summary.adaptivity_summary},
            ),
        ]
    return written


def stage_analyze(cfg: RunConfig, out: Path, engines=None) -> list[Path]:
    out.mkdir(parents=True, exist_ok=True)
    dataset = _load_dataset(cfg, out)
    comp_values, comp_names = _read_composites(cfg, out)
    y_ref = dataset.target()
    written: list[Path] = []
    benchmark_rows: list[tuple[str, float, float]] = []
    fit = baseline_lm(y_ref, comp_values)
    benchmark_rows.append(("Linear Regression (LM)", fit.rmse, fit.mae))
    for engine in engines or cfg.engines:
        unc_path = _require(artifact(out, f"uncertainty_{engine.value}.csv"), "conformal")
        y_est = read_column(unc_path, "y_est")
        report = compare(y_ref, y_est)
        written.append(
            write_comparison(artifact(out, f"comparison_{engine.value}.csv"), report)
        )
        residuals = y_ref - y_est
        written.append(
            write_associations(
                artifact(out, f"residual_mpi_{engine.value}.csv"),
                residual_associations(residuals, comp_values, comp_names),
            )
        )
        written.append(
            write_ols(
                artifact(out, f"ols_{engine.value}.csv"),
                ols_standardized(residuals, comp_values, comp_names),
            )
        )

        meta, arrays = _read_retained(out, engine)
        h_ref = float(meta["h_ref"])
        energies = arrays["energies"]
        chains = arrays["chains"].astype(int)
        temps = np.asarray(meta["final_temperatures"], dtype=float)
        t_like = cfg.likelihood_temperature
        per_snapshot_t = (
            np.full(energies.shape[0], t_like) if t_like is not None else temps[chains]
        )
        log_ratio = -(energies - h_ref) / per_snapshot_t
        if h_ref != 0.0:
            ratios = energies / h_ref
            table = {
                "energy_ratio": six_number(ratios),
                "log_likelihood_ratio": six_number(log_ratio),
            }
        else:  # ratio undefined at zero reference energy
            nan6 = six_number([np.nan])
            table = {"energy_ratio": nan6, "log_likelihood_ratio": six_number(log_ratio)}
        written.append(
            write_six_number_table(artifact(out, f"energy_ratio_{engine.value}.csv"), table)
        )

        res_path = _require(artifact(out, f"unit_results_{engine.value}.csv"), "conformal")
        results = UnitResults(
            y_ref=y_ref,
            y_est=y_est,
            coverage=read_column(res_path, "coverage"),
            adaptivity=read_column(res_path, "adaptivity"),
        )
        for attribute in PROFILE_COLUMNS:
            rows = group_summaries(results, dataset, attribute, comp_values)
            written.append(
                write_group_summaries(
                    artifact(out, f"group_summary_{engine.value}_{attribute}.csv"), rows
                )
            )
            written.append(
                write_group_mpi(
                    artifact(out, f"group_mpi_{engine.value}_{attribute}.csv"),
                    rows, comp_names,
                )
            )
        comp = read_comparison(artifact(out, f"comparison_{engine.value}.csv"))
        benchmark_rows.append(
            ("Continuous Ising" if engine is Engine.ISING else "Langevin dynamics",
             comp["rmse"], comp["mae"])
        )
    written.append(write_benchmark(artifact(out, "benchmark.csv"), benchmark_rows))
    return written


def stage_report(cfg: RunConfig, out: Path) -> list[Path]:
    out.mkdir(parents=True, exist_ok=True)
    lines = ["run report", "=" * 60, ""]
    validation = _require(artifact(out, "validation.txt"), "validate")
    lines += ["[dataset]", validation.read_text(encoding="utf-8").rstrip(), ""]
    graph_summary = _require(artifact(out, "graph_summary.txt"), "graph")
    lines += ["[similarity graph]", graph_summary.read_text(encoding="utf-8").rstrip(), ""]
    field_diag = _require(artifact(out, "field_diagnostics.txt"), "field")
    lines += ["[external field]", field_diag.read_text(encoding="utf-8").rstrip(), ""]
    for engine in cfg.engines:
        meta_path = _require(artifact(out, f"retained_{engine.value}.json"), "simulate")
        comp_path = _require(artifact(out, f"comparison_{engine.value}.csv"), "analyze")
        cov_path = _require(artifact(out, f"coverage_adaptivity_{engine.value}.csv"), "conformal")
        meta = json.loads(meta_path.read_text(encoding="utf-8"))
        comp = read_comparison(comp_path)
        lines.append(f"[{engine.value}]")
        lines.append(
            f"chains: {meta['k_chains']} x {meta['n_iters']} iterations "
            f"(burn-in {meta['burn_in']}, thin {meta['thin']})"
        )
        lines.append(f"lambda: {meta['lambda_reg']!r}  reference energy: {meta['h_ref']!r}")
        lines.append(
            "initial mean: {:.4f}  estimated mean: {:.4f}".format(
                comp["initial_mean"], comp["estimated_mean"]
            )
        )
        lines.append(
            "mae: {:.4f}  rmse: {:.4f}  correlation: {:.4f}".format(
                comp["mae"], comp["rmse"], comp["correlation"]
            )
        )
        header, rows = read_table(cov_path)
        for row in rows:
            lines.append(
                "{}: ".format(row[0])
                + "  ".join(f"{h}={float(v):.4f}" for h, v in zip(header[1:], row[1:]))
            )
        lines.append("")
    bench = _require(artifact(out, "benchmark.csv"), "analyze")
    lines += ["[benchmark]"]
    header, rows = read_table(bench)
    for row in rows:
        lines.append(f"{row[0]}: rmse={float(row[1]):.4f} mae={float(row[2]):.4f}")
    path = artifact(out, "report.txt")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return [path]


def run_pipeline(cfg: RunConfig, out: Path) -> list[Path]:
    """Execute every stage in order and write the manifest."""
    out = Path(out)
    written: list[Path] = []
    if cfg.dataset_path is None:
        written += stage_synth(cfg, out)
    written += stage_validate(cfg, out)
    written += stage_field(cfg, out)
    written += stage_graph(cfg, out)
    written += stage_simulate(cfg, out)
    written += stage_conformal(cfg, out)
    written += stage_analyze(cfg, out)
    written += stage_report(cfg, out)
    manifest = {
        "config": manifest_config(cfg),
        "config_sha256": config_hash(cfg),
        "versions": {
            "softspin": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "python": ".".join(map(str, sys.version_info[:3])),
        },
        "artifacts": sorted(p.name for p in written),
    }
    manifest_path = write_json(artifact(out, "manifest.json"), manifest)
    return written + [manifest_path]
