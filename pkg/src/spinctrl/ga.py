"""Real-coded generational genetic search over box-constrained parameter vectors.

The loop keeps the best individuals verbatim (elitism), draws parents by
binary tournament from the top ``parents_fraction`` of the ranked population,
applies uniform crossover with the configured probability, and mutates each
gene by uniform resampling inside its bounds.  Defaults mirror a widely used
real-coded GA package: mutation 0.1, crossover 0.5, parents fraction 0.3.
Evaluations that come back non-finite are quarantined at worst fitness instead
of propagating.  One objective evaluation equals one solved Cauchy problem in
the complexity ledger.  Runs are deterministic for a fixed ``rng_seed``.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .controls import SinClassParams
from .errors import InputError
from .model import ChainModel, default_chain_model
from .objectives import eval_free_time_f3, eval_keeping_f4
from .propagator import CauchyCounter

__all__ = [
    "GaConfig",
    "GaGeneration",
    "GaRunRecord",
    "run_ga",
    "MultiSeedGaResult",
    "run_ga_multi_seed",
    "KeepingClassObjective",
    "FreeTimeClassObjective",
    "keeping_class_box",
    "free_time_class_box",
    "ga_keeping_preset",
    "ga_free_time_transfer_preset",
]


@dataclass(frozen=True)
class GaConfig:
    population_size: int = 100
    generations: int = 300
    mutation_probability: float = 0.1
    crossover_probability: float = 0.5
    parents_fraction: float = 0.3
    elite_count: int = 1
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if self.population_size < 2:
            raise InputError("population_size must be >= 2")
        if self.generations < 0:
            raise InputError("generations must be >= 0")
        for name in ("mutation_probability", "crossover_probability", "parents_fraction"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise InputError(f"{name} must lie in [0, 1]")
        if not 0 <= self.elite_count < self.population_size:
            raise InputError("elite_count must be smaller than the population")


@dataclass
class GaGeneration:
    generation: int
    best_value: float
    best_so_far: float
    evaluations: int


@dataclass
class GaRunRecord:
    history: list[GaGeneration]
    best_x: np.ndarray
    best_value: float
    evaluations: int
    milestones: dict[float, int]
    rng_seed: int
    wall_time_s: float


def _validate_box(bounds: np.ndarray) -> np.ndarray:
    bounds = np.asarray(bounds, dtype=float)
    if bounds.ndim != 2 or bounds.shape[1] != 2 or bounds.shape[0] < 1:
        raise InputError(f"bounds must have shape (d, 2), got {bounds.shape}")
    if not np.all(np.isfinite(bounds)):
        raise InputError("bounds contain non-finite entries")
    if np.any(bounds[:, 1] < bounds[:, 0]):
        raise InputError("bounds must satisfy lo <= hi in every coordinate")
    return bounds


def run_ga(
    objective: Callable[[np.ndarray], float],
    bounds: np.ndarray,
    config: GaConfig,
    *,
    milestone_thresholds: Sequence[float] = (),
    counter: CauchyCounter | None = None,
) -> GaRunRecord:
    """Minimize ``objective`` over the box; see the module docstring for the operators."""
    t_start = time.perf_counter()
    bounds = _validate_box(bounds)
    lo, hi = bounds[:, 0].copy(), bounds[:, 1].copy()
    span = hi - lo
    dim = lo.size
    rng = np.random.default_rng(config.rng_seed)
    milestones: dict[float, int] = {}

    def safe_eval(x: np.ndarray) -> float:
        val = float(objective(x))
        if counter is not None:
            counter.add(1)
        return val if np.isfinite(val) else np.inf

    if np.all(span == 0.0):
        # fully collapsed box: the single feasible point is the answer
        value = safe_eval(lo)
        for th in milestone_thresholds:
            if value < th:
                milestones[float(th)] = 1
        return GaRunRecord(
            history=[GaGeneration(0, value, value, 1)],
            best_x=lo.copy(),
            best_value=value,
            evaluations=1,
            milestones=milestones,
            rng_seed=config.rng_seed,
            wall_time_s=time.perf_counter() - t_start,
        )

    pop_size = config.population_size
    pop = lo[None, :] + rng.random((pop_size, dim)) * span[None, :]
    fitness = np.array([safe_eval(x) for x in pop])
    evaluations = pop_size

    best_idx = int(np.argmin(fitness))
    best_x = pop[best_idx].copy()
    best_value = float(fitness[best_idx])

    def note_milestones() -> None:
        for th in milestone_thresholds:
            th = float(th)
            if th not in milestones and best_value < th:
                milestones[th] = evaluations

    note_milestones()
    history = [GaGeneration(0, float(np.min(fitness)), best_value, evaluations)]

    n_parents = max(2, int(round(config.parents_fraction * pop_size)))
    n_parents = min(n_parents, pop_size)

    for gen in range(1, config.generations + 1):
        order = np.argsort(fitness, kind="stable")
        pop = pop[order]
        fitness = fitness[order]

        next_pop = np.empty_like(pop)
        next_fit = np.full(pop_size, np.nan)
        elite = config.elite_count
        next_pop[:elite] = pop[:elite]
        next_fit[:elite] = fitness[:elite]

        for slot in range(elite, pop_size):
            # binary tournament inside the ranked parents pool
            i, j = rng.integers(0, n_parents, size=2)
            pa = pop[min(i, j)]
            i, j = rng.integers(0, n_parents, size=2)
            pb = pop[min(i, j)]
            if rng.random() < config.crossover_probability:
                mask = rng.random(dim) < 0.5
                child = np.where(mask, pa, pb)
            else:
                child = pa.copy()
            mut = rng.random(dim) < config.mutation_probability
            if mut.any():
                child = child.copy()
                child[mut] = lo[mut] + rng.random(int(mut.sum())) * span[mut]
            next_pop[slot] = child

        pop, fitness = next_pop, next_fit
        for slot in range(elite, pop_size):
            fitness[slot] = safe_eval(pop[slot])
        evaluations += pop_size - elite

        gen_best = int(np.argmin(fitness))
        if fitness[gen_best] < best_value:
            best_value = float(fitness[gen_best])
            best_x = pop[gen_best].copy()
        note_milestones()
        history.append(GaGeneration(gen, float(fitness[gen_best]), best_value, evaluations))

    return GaRunRecord(
        history=history,
        best_x=best_x,
        best_value=best_value,
        evaluations=evaluations,
        milestones=milestones,
        rng_seed=config.rng_seed,
        wall_time_s=time.perf_counter() - t_start,
    )


@dataclass
class MultiSeedGaResult:
    records: list[GaRunRecord]
    best_record_index: int
    total_evaluations: int

    @property
    def best_record(self) -> GaRunRecord:
        return self.records[self.best_record_index]

    @property
    def best_value(self) -> float:
        return self.best_record.best_value

    @property
    def best_x(self) -> np.ndarray:
        return self.best_record.best_x


def run_ga_multi_seed(
    objective: Callable[[np.ndarray], float],
    bounds: np.ndarray,
    config: GaConfig,
    n_seeds: int,
    *,
    milestone_thresholds: Sequence[float] = (),
    counter: CauchyCounter | None = None,
) -> MultiSeedGaResult:
    """Independent GA runs with seeds rng_seed, rng_seed + 1, ...; best one marked."""
    records = []
    for i in range(n_seeds):
        cfg = GaConfig(
            population_size=config.population_size,
            generations=config.generations,
            mutation_probability=config.mutation_probability,
            crossover_probability=config.crossover_probability,
            parents_fraction=config.parents_fraction,
            elite_count=config.elite_count,
            rng_seed=config.rng_seed + i,
        )
        records.append(
            run_ga(objective, bounds, cfg, milestone_thresholds=milestone_thresholds, counter=counter)
        )
    best = int(np.argmin([r.best_value for r in records]))
    return MultiSeedGaResult(
        records=records,
        best_record_index=best,
        total_evaluations=sum(r.evaluations for r in records),
    )


@dataclass(frozen=True)
class KeepingClassObjective:
    """f4 over the sinusoidal class on a fixed model."""

    model: ChainModel
    m_sin: int
    p_y: float = 0.0

    def __call__(self, x: np.ndarray) -> float:
        params = SinClassParams.from_vector(np.asarray(x, dtype=float), self.m_sin)
        return eval_keeping_f4(self.model, params, self.p_y).value


@dataclass(frozen=True)
class FreeTimeClassObjective:
    """f3 over the sinusoidal class with a trailing final-time gene, unit-grid model."""

    model_tau: ChainModel
    m_sin: int
    p_x: float = 0.0
    p_t: float = 0.0

    def __call__(self, x: np.ndarray) -> float:
        params = SinClassParams.from_vector(np.asarray(x, dtype=float), self.m_sin, with_time=True)
        return eval_free_time_f3(self.model_tau, params, self.p_x, self.p_t).value


def keeping_class_box(
    gamma_bounds: tuple[float, float],
    omega_ranges: tuple[tuple[float, float], tuple[float, float]],
    m_sin: int,
) -> np.ndarray:
    """Search box for the keeping class: |gamma_{l,i}| <= b_bar_l, omega in channel ranges."""
    rows = []
    for l in range(2):
        rows += [[-gamma_bounds[l], gamma_bounds[l]]] * m_sin
    for l in range(2):
        rows += [list(omega_ranges[l])] * m_sin
    return np.array(rows, dtype=float)


def free_time_class_box(
    gamma_bounds: tuple[float, float],
    omega_ranges: tuple[tuple[float, float], tuple[float, float]],
    m_sin: int,
    t_range: tuple[float, float],
) -> np.ndarray:
    """Keeping-class box plus the final-time gene T in ``t_range``."""
    base = keeping_class_box(gamma_bounds, omega_ranges, m_sin)
    return np.vstack([base, np.array([t_range], dtype=float)])


def ga_keeping_preset(
    config: GaConfig,
    *,
    n_seeds: int = 6,
    n_levels: int = 3,
    t_final: float = 0.5,
    n_intervals: int = 500,
    b_bar: tuple[float, float] = (5.0, 3.0),
    q: tuple[int, int] = (8, 8),
    m_sin: int = 3,
    omega_ranges: tuple[tuple[float, float], tuple[float, float]] = ((3.0, 10.0), (2.0, 4.0)),
    p_y: float = 0.0,
    milestone_thresholds: Sequence[float] = (0.01, 0.005),
    counter: CauchyCounter | None = None,
) -> tuple[ChainModel, MultiSeedGaResult]:
    """State keeping on the default chain via the sinusoidal class.

    The chain starts and should stay at the last site over [0, t_final]; the
    search runs ``n_seeds`` independently seeded GA instances and reports all
    of them, the best one marked.
    """
    model = default_chain_model(
        n_levels, t_final, n_intervals,
        b_bar=b_bar, q=q, psi0_site=n_levels, psig_site=n_levels,
    )
    objective = KeepingClassObjective(model, m_sin, p_y)
    bounds = keeping_class_box(b_bar, omega_ranges, m_sin)
    result = run_ga_multi_seed(objective, bounds, config, n_seeds,
                               milestone_thresholds=milestone_thresholds, counter=counter)
    return model, result


def ga_free_time_transfer_preset(
    config: GaConfig,
    *,
    n_seeds: int = 3,
    n_levels: int = 20,
    n_intervals: int = 500,
    t_range: tuple[float, float] = (23.0, 26.0),
    b_bar: tuple[float, float] = (5.0, 5.0),
    q: tuple[int, int] = (2, 2),
    m_sin: int = 3,
    gamma_bounds: tuple[float, float] = (5.0, 5.0),
    omega_ranges: tuple[tuple[float, float], tuple[float, float]] = ((0.0, 3.0), (0.0, 3.0)),
    p_x: float = 0.0,
    p_t: float = 0.0,
    milestone_thresholds: Sequence[float] = (),
    counter: CauchyCounter | None = None,
) -> tuple[ChainModel, MultiSeedGaResult]:
    """End-to-end transfer on a long chain with the final time as a search gene.

    The model lives on the unit grid; each candidate's final time scales the
    generator through the t = T * tau substitution.
    """
    model_tau = default_chain_model(
        n_levels, 1.0, n_intervals,
        b_bar=b_bar, q=q, psi0_site=1, psig_site=n_levels,
    )
    objective = FreeTimeClassObjective(model_tau, m_sin, p_x, p_t)
    bounds = free_time_class_box(gamma_bounds, omega_ranges, m_sin, t_range)
    result = run_ga_multi_seed(objective, bounds, config, n_seeds,
                               milestone_thresholds=milestone_thresholds, counter=counter)
    return model_tau, result
