"""Annealed MCMC engines: single-site Metropolis and Euler-Maruyama Langevin.

Both engines explore the energy landscape around a reference configuration
under a geometric cooling schedule. The Metropolis engine perturbs one
randomly chosen spin with Gaussian noise and accepts with the Boltzmann
rule, cooling on acceptance by default; the Langevin engine performs
full-vector gradient steps with temperature-scaled noise and a step size
proportional to the current temperature, so drift and noise shrink
together. Chains are reproducible: each one owns a counter-based Philox
stream keyed by its seed, and parallel runs assign stream keys by chain
index so results do not depend on scheduling.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from enum import Enum
from typing import Sequence

import numpy as np

from .data import DOMAIN_BOUNDS, Domain, unscale_values
from .energy import EnergyModel, SpinConfiguration, hamiltonian
from .errors import (
    ConfigError,
    DivergenceDetected,
    InsufficientSamples,
    ParallelChainError,
)
from .graph import GroupSums


class Engine(str, Enum):
    ISING = "ising"
    LANGEVIN = "langevin"


class CoolingMode(str, Enum):
    ON_ACCEPT = "on_accept"  # temperature drops only when a proposal is accepted
    PER_STEP = "per_step"    # temperature drops every iteration


def make_rng(seed: int) -> np.random.Generator:
    """Counter-based 64-bit generator; distinct seeds give independent streams."""
    return np.random.Generator(np.random.Philox(key=seed))


@dataclass(frozen=True)
class AnnealingSchedule:
    """Geometric cooling plus the per-engine step parameters.

    ``t_min == t0`` keeps the temperature constant, which is how fixed-T
    runs (stationarity diagnostics) are expressed. ``dt0`` is the Langevin
    base step at ``t0``; the effective step is dt0 * T/t0. ``proposal_sd``
    is the Metropolis Gaussian perturbation scale.
    """

    t0: float = 1.0
    cooling: float = 0.9995
    t_min: float = 1e-3
    mode: CoolingMode = CoolingMode.ON_ACCEPT
    dt0: float = 1e-4
    proposal_sd: float = 0.05

    def __post_init__(self):
        if not self.t0 > 0:
            raise ConfigError("schedule: t0 must be > 0")
        if not 0.0 < self.cooling < 1.0:
            raise ConfigError("schedule: cooling must be in (0, 1)")
        if not 0.0 <= self.t_min <= self.t0:
            raise ConfigError("schedule: need t0 >= t_min >= 0")
        if not self.dt0 > 0:
            raise ConfigError("schedule: dt0 must be > 0")
        if not self.proposal_sd > 0:
            raise ConfigError("schedule: proposal_sd must be > 0")

    def cooled(self, temperature: float) -> float:
        return max(self.t_min, self.cooling * temperature)


AUTO_BOUNDS = "auto"


@dataclass(frozen=True)
class ChainConfig:
    """Run-length, retention and reproducibility settings of one chain.

    ``bounds`` is the state-space boundary policy: the default "auto"
    derives it from the configuration's domain ([-1, 1] or [0, 100]),
    an explicit pair overrides it, and None lifts it entirely (used by
    unbounded diagnostics). Metropolis proposals are reflected at the
    bounds, which preserves proposal symmetry; Langevin states are clamped,
    with a divergence guard ten domain-widths out.
    """

    engine: Engine
    n_iters: int
    burn_in_frac: float = 0.10
    thin: int = 1
    retain_last: int = 0
    seed: int = 0
    schedule: AnnealingSchedule = AnnealingSchedule()
    init: np.ndarray | None = None  # None starts from the reference configuration
    bounds: tuple[float, float] | None | str = AUTO_BOUNDS
    energy_stride: int = 10
    recompute_every: int = 100_000

    def __post_init__(self):
        if self.n_iters < 0:
            raise ConfigError("chain: n_iters must be >= 0")
        if not 0.0 <= self.burn_in_frac < 1.0:
            raise ConfigError("chain: burn_in_frac must be in [0, 1)")
        if self.thin < 1:
            raise ConfigError("chain: thin must be >= 1")
        if self.energy_stride < 1:
            raise ConfigError("chain: energy_stride must be >= 1")
        if self.recompute_every < 1:
            raise ConfigError("chain: recompute_every must be >= 1")
        if self.retain_last < 0:
            raise ConfigError("chain: retain_last must be >= 0")
        capacity = (self.n_iters - self.burn_in(self.n_iters)) // self.thin
        if self.retain_last > capacity:
            raise ConfigError(
                f"chain: retain_last={self.retain_last} exceeds the "
                f"{capacity} post-burn-in thinned snapshots available"
            )

    def burn_in(self, n_iters: int | None = None) -> int:
        n = self.n_iters if n_iters is None else n_iters
        return int(self.burn_in_frac * n)

    def resolve_bounds(self, domain: Domain) -> tuple[float, float] | None:
        if self.bounds == AUTO_BOUNDS:
            return DOMAIN_BOUNDS[domain]
        if self.bounds is None:
            return None
        lo, hi = self.bounds
        if not lo < hi:
            raise ConfigError("chain: bounds must satisfy lo < hi")
        return float(lo), float(hi)


@dataclass
class ChainState:
    """Mutable state owned by exactly one chain."""

    s: np.ndarray
    temperature: float
    sums: GroupSums
    energy: float
    bounds: tuple[float, float] | None


def init_state(model: EnergyModel, s0, schedule: AnnealingSchedule,
               bounds: tuple[float, float] | None) -> ChainState:
    s = np.array(s0, dtype=float)
    sums = GroupSums(model.graph, s)
    return ChainState(s, schedule.t0, sums, hamiltonian(model, s), bounds)


def _reflect(x: float, lo: float, hi: float) -> float:
    """Fold a point back into [lo, hi] by reflection at the walls."""
    width = hi - lo
    y = (x - lo) % (2.0 * width)
    if y > width:
        y = 2.0 * width - y
    return lo + y


def accept_probability(delta: float, temperature: float) -> float:
    """Boltzmann acceptance: 1 for downhill moves, exp(-dH/T) uphill."""
    if delta <= 0.0:
        return 1.0
    if temperature <= 0.0:
        return 0.0
    return math.exp(-delta / temperature)


def metropolis_step(model: EnergyModel, state: ChainState,
                    schedule: AnnealingSchedule, rng) -> bool:
    """One single-site Metropolis update; returns whether it was accepted.

    Draws a uniform site, perturbs it with Gaussian noise of scale
    ``proposal_sd`` (reflected at the bounds if any), and accepts with
    min{1, exp(-dH/T)}. On acceptance the spin, the group-sum cache and the
    running energy are updated and, in on-accept mode, the temperature cools.
    One uniform variate is consumed per step regardless of the branch so the
    random stream is aligned across runs.
    """
    s = state.s
    i = int(rng.integers(0, s.shape[0]))
    s_i = float(s[i])
    s_new = s_i + float(rng.standard_normal()) * schedule.proposal_sd
    if state.bounds is not None:
        s_new = _reflect(s_new, state.bounds[0], state.bounds[1])
    g = model.graph.group_of[i]
    nb = float(state.sums.sums[g]) - s_i
    diff = s_new - s_i
    delta = (
        -diff * nb
        - float(model.field[i]) * diff
        + 0.5 * model.lambda_reg * (s_new * s_new - s_i * s_i)
    )
    u = float(rng.random())
    temperature = state.temperature
    if delta <= 0.0:
        accepted = True
    elif temperature <= 0.0:
        accepted = False
    else:
        accepted = u < math.exp(-delta / temperature)
    if accepted:
        s[i] = s_new
        state.sums.sums[g] += diff
        state.energy += delta
        if schedule.mode is CoolingMode.ON_ACCEPT:
            state.temperature = schedule.cooled(temperature)
    if schedule.mode is CoolingMode.PER_STEP:
        state.temperature = schedule.cooled(temperature)
    return accepted


def langevin_step(model: EnergyModel, state: ChainState,
                  schedule: AnnealingSchedule, rng) -> None:
    """One full-vector Euler-Maruyama update with annealed step size.

    s <- s - dt * grad H(s) + sqrt(2 T dt) * eta with eta standard normal
    and dt = dt0 * T/t0, so the drift and noise scales shrink together as
    the temperature drops. States leaving the divergence guard (ten domain
    widths beyond the bounds, or non-finite anywhere) raise; bounded states
    are clamped back into the domain. Cools every step in per-step mode.
    """
    temperature = state.temperature
    dt = schedule.dt0 * (temperature / schedule.t0)
    s = state.s
    gsum = state.sums.sums
    nb = gsum[model.graph.group_of] - s
    gradient = -nb - model.field + model.lambda_reg * s
    noise = rng.standard_normal(s.shape[0])
    s_new = s - dt * gradient + math.sqrt(2.0 * temperature * dt) * noise

    if not np.all(np.isfinite(s_new)):
        raise DivergenceDetected(detail="non-finite state")
    if state.bounds is not None:
        lo, hi = state.bounds
        guard = 10.0 * (hi - lo)
        if float(s_new.min()) < lo - guard or float(s_new.max()) > hi + guard:
            raise DivergenceDetected(detail="state escaped the domain guard")
        np.clip(s_new, lo, hi, out=s_new)
    elif float(np.abs(s_new).max()) > 1e12:
        raise DivergenceDetected(detail="unbounded state exceeded 1e12")

    state.s = s_new
    state.sums.recompute(s_new)
    if schedule.mode is CoolingMode.PER_STEP:
        state.temperature = schedule.cooled(temperature)


@dataclass
class ChainTrace:
    """Everything a finished chain leaves behind.

    ``energies`` is the strided energy series (iteration 0 included);
    ``retained`` holds the last ``retain_last`` thinned post-burn-in
    snapshots in chronological order, with matching iteration numbers and
    energies.
    """

    engine: Engine
    domain: Domain
    seed: int
    energies: np.ndarray
    energy_iterations: np.ndarray
    retained: np.ndarray
    retained_iterations: np.ndarray
    retained_energies: np.ndarray
    accept_count: int
    final_temperature: float
    n_iters: int
    burn_in: int
    config: ChainConfig

    @property
    def acceptance_rate(self) -> float:
        return self.accept_count / self.n_iters if self.n_iters else 0.0


def run_chain(model: EnergyModel, cfg: ChainConfig, s_ref: SpinConfiguration) -> ChainTrace:
    """Run one chain: burn-in, thinned retention of the last snapshots.

    The chain starts at ``cfg.init`` if given, otherwise at the reference
    configuration. Energies are recorded every ``energy_stride`` iterations;
    the group-sum cache and running energy are fully recomputed every
    ``recompute_every`` iterations to cancel float drift. Divergence is
    re-raised with the iteration index attached.
    """
    n = model.graph.n
    s0 = cfg.init if cfg.init is not None else s_ref.s
    s0 = np.asarray(s0, dtype=float)
    if s0.shape != (n,):
        raise ConfigError("chain: initial configuration length does not match N")
    bounds = cfg.resolve_bounds(s_ref.domain)
    schedule = cfg.schedule
    rng = make_rng(cfg.seed)
    state = init_state(model, s0, schedule, bounds)

    burn = cfg.burn_in()
    stride = cfg.energy_stride
    n_rec = cfg.n_iters // stride + 1
    energies = np.empty(n_rec)
    energy_iters = np.empty(n_rec, dtype=np.int64)
    energies[0] = state.energy
    energy_iters[0] = 0
    rec = 1

    retain = cfg.retain_last
    ring = np.empty((retain, n)) if retain else np.empty((0, n))
    ring_iters = np.empty(retain, dtype=np.int64)
    ring_energy = np.empty(retain)
    kept = 0
    accepts = 0
    is_metropolis = cfg.engine is Engine.ISING

    for t in range(1, cfg.n_iters + 1):
        try:
            if is_metropolis:
                accepts += metropolis_step(model, state, schedule, rng)
            else:
                langevin_step(model, state, schedule, rng)
        except DivergenceDetected as exc:
            raise DivergenceDetected(t, exc.detail) from None
        if t % cfg.recompute_every == 0:
            state.sums.recompute(state.s)
            state.energy = hamiltonian(model, state.s)
        record = t % stride == 0
        keep = retain and t > burn and (t - burn) % cfg.thin == 0
        if record or keep:
            energy = state.energy if is_metropolis else hamiltonian(model, state.s)
            if record:
                energies[rec] = energy
                energy_iters[rec] = t
                rec += 1
            if keep:
                pos = kept % retain
                ring[pos] = state.s
                ring_iters[pos] = t
                ring_energy[pos] = energy
                kept += 1

    if retain and kept:
        shift = kept % retain if kept >= retain else 0
        order = np.arange(retain) if kept >= retain else np.arange(kept)
        if shift:
            order = np.roll(order, -shift)
        retained = ring[order]
        retained_iters = ring_iters[order]
        retained_energy = ring_energy[order]
    else:
        retained = np.empty((0, n))
        retained_iters = np.empty(0, dtype=np.int64)
        retained_energy = np.empty(0)

    accept_count = accepts if is_metropolis else cfg.n_iters
    return ChainTrace(
        engine=cfg.engine,
        domain=s_ref.domain,
        seed=cfg.seed,
        energies=energies[:rec],
        energy_iterations=energy_iters[:rec],
        retained=retained,
        retained_iterations=retained_iters,
        retained_energies=retained_energy,
        accept_count=int(accept_count),
        final_temperature=state.temperature,
        n_iters=cfg.n_iters,
        burn_in=burn,
        config=cfg,
    )


def _chain_job(args):
    model, cfg, s_ref = args
    return run_chain(model, cfg, s_ref)


def run_parallel(
    model: EnergyModel,
    cfg: ChainConfig,
    s_ref: SpinConfiguration,
    k_chains: int,
    base_seed: int | None = None,
    workers: int = 1,
) -> list[ChainTrace]:
    """Run ``k_chains`` independent chains with seeds base_seed + index.

    Each chain owns its configuration, cache and random stream, so the
    result is invariant to the worker count and scheduling; traces come back
    in chain-index order. A failing chain does not abort its siblings: all
    failures are collected and raised together afterwards.
    """
    if k_chains < 1:
        raise ConfigError("k_chains must be >= 1")
    base = cfg.seed if base_seed is None else base_seed
    configs = [replace(cfg, seed=base + i) for i in range(k_chains)]

    results: list[ChainTrace | None] = [None] * k_chains
    failures: list[tuple[int, Exception]] = []
    if workers <= 1 or k_chains == 1:
        for i, c in enumerate(configs):
            try:
                results[i] = run_chain(model, c, s_ref)
            except Exception as exc:  # collected, reported per chain below
                failures.append((i, exc))
    else:
        with ProcessPoolExecutor(max_workers=min(workers, k_chains)) as pool:
            futures = [pool.submit(_chain_job, (model, c, s_ref)) for c in configs]
            for i, fut in enumerate(futures):
                try:
                    results[i] = fut.result()
                except Exception as exc:
                    failures.append((i, exc))
    if failures:
        raise ParallelChainError(failures)
    return results  # type: ignore[return-value]


def pooled_retained(traces: Sequence[ChainTrace]):
    """Pool retained snapshots across chains, oldest first.

    Snapshots are ordered by (iteration, chain index) so "most recent" is
    well defined and deterministic across runs. Returns (configs, iterations,
    chain_ids, energies).
    """
    configs = np.concatenate([t.retained for t in traces], axis=0)
    iters = np.concatenate([t.retained_iterations for t in traces])
    chains = np.concatenate(
        [np.full(t.retained.shape[0], k, dtype=np.int64) for k, t in enumerate(traces)]
    )
    energies = np.concatenate([t.retained_energies for t in traces])
    order = np.lexsort((chains, iters))
    return configs[order], iters[order], chains[order], energies[order]


def posterior_mean(traces: Sequence[ChainTrace], last_n: int) -> np.ndarray:
    """Mean of the pooled most recent ``last_n`` snapshots, in raw percent.

    The mean is taken in the traces' own domain and mapped back through the
    inverse target scaling (the identity for the raw-percent domain).
    """
    if not traces:
        raise InsufficientSamples("no traces given")
    domains = {t.domain for t in traces}
    if len(domains) != 1:
        raise ConfigError("cannot pool traces from different domains")
    configs, _, _, _ = pooled_retained(traces)
    if configs.shape[0] < last_n:
        raise InsufficientSamples(
            f"pooled retained {configs.shape[0]} < requested {last_n}"
        )
    mean = configs[-last_n:].mean(axis=0)
    return unscale_values(mean, traces[0].domain)
