"""Genetic optimization of constituency groupings.

A chromosome assigns every constituency to one of ``n_groups`` groups;
its fitness is the forecast error that grouping produces under a fixed
declaration scenario, plus a soft penalty for groups with too few
declared stations. Each generation keeps an elite share unchanged,
injects a share of fresh random chromosomes, and fills the remainder
with mutated crossover children where parent one always comes from the
elite slice (elite mixture breeding).

All randomness flows through one seeded generator on the sequential
path, so runs are pure functions of their inputs and fitness evaluation
order can never perturb results.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass, replace
from typing import Callable, Iterable, Sequence

import numpy as np

from .model import Dataset, DeclarationState, ValidationError
from .regression import (
    NoDeclaredStationsError,
    assemble_forecast,
    estimate_transition,
    global_transition,
    project_station,
    rmse,
    to_elec_shares,
    to_vald_shares,
)

OPERATOR_NAMES = frozenset({"mutation", "crossover", "reseed"})

# Held-out share of declared stations used as live-mode ground truth.
LIVE_HOLDOUT_FRACTION = 0.2


@dataclass(frozen=True)
class GroupingChromosome:
    """One grouping solution: a group label per constituency."""

    genes: tuple[int, ...]
    fitness: float | None = None

    def __len__(self) -> int:
        return len(self.genes)

    def digest(self) -> str:
        return hashlib.sha1(",".join(map(str, self.genes)).encode()).hexdigest()[:12]


@dataclass(frozen=True)
class GaConfig:
    """Knobs of the genetic optimization.

    ``min_declared_per_group`` defaults to the reference party count
    plus two when left as None; ``penalty_weight`` defaults to ten times
    the best raw forecast error of the initial population, resolved when
    a run starts.
    """

    population_size: int = 100
    generations: int = 500
    elite_fraction: float = 0.1
    eligible_fraction: float = 0.7
    mutation_prob: float = 0.003
    reseed_fraction: float = 0.1
    n_groups: int = 10
    metric: str = "abs"
    min_declared_per_group: int | None = None
    penalty_weight: float | None = None
    seed: int = 0
    disabled_operators: frozenset[str] = frozenset()
    early_stop: bool = False

    def __post_init__(self) -> None:
        if self.population_size < 1 or self.generations < 0 or self.n_groups < 1:
            raise ValidationError("population_size, generations, n_groups out of range")
        if not 0.0 <= self.mutation_prob <= 1.0:
            raise ValidationError("mutation_prob must be in [0, 1]")
        for name in ("elite_fraction", "eligible_fraction", "reseed_fraction"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValidationError(f"{name} must be in [0, 1]")
        if self.elite_fraction + self.reseed_fraction >= 1.0:
            raise ValidationError("elite_fraction + reseed_fraction must be < 1")
        if self.eligible_fraction < self.elite_fraction:
            raise ValidationError("eligible_fraction must be >= elite_fraction")
        if self.metric not in ("abs", "elec", "vald"):
            raise ValidationError(f"unknown metric {self.metric!r}")
        unknown = set(self.disabled_operators) - OPERATOR_NAMES
        if unknown:
            raise ValidationError(f"unknown operator(s) {sorted(unknown)}")
        if self.penalty_weight is not None and self.penalty_weight < 0:
            raise ValidationError("penalty_weight must be nonnegative")
        if self.min_declared_per_group is not None and self.min_declared_per_group < 0:
            raise ValidationError("min_declared_per_group must be nonnegative")


def config_to_dict(config: GaConfig) -> dict:
    return {
        "population_size": config.population_size,
        "generations": config.generations,
        "elite_fraction": config.elite_fraction,
        "eligible_fraction": config.eligible_fraction,
        "mutation_prob": config.mutation_prob,
        "reseed_fraction": config.reseed_fraction,
        "n_groups": config.n_groups,
        "metric": config.metric,
        "min_declared_per_group": config.min_declared_per_group,
        "penalty_weight": config.penalty_weight,
        "seed": config.seed,
        "disabled_operators": sorted(config.disabled_operators),
        "early_stop": config.early_stop,
    }


def config_from_dict(doc: dict) -> GaConfig:
    doc = dict(doc)
    doc["disabled_operators"] = frozenset(doc.get("disabled_operators", ()))
    return GaConfig(**doc)


def config_digest(config: GaConfig) -> str:
    payload = json.dumps(config_to_dict(config), sort_keys=True)
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


@dataclass(frozen=True)
class GenerationStats:
    generation: int
    best_fitness: float
    mean_fitness: float
    best_digest: str
    wall_clock: float


@dataclass(frozen=True)
class ConvergenceTrace:
    """Per-generation fitness statistics of one run.

    Generation 0 is the evaluated initial population; each evolution
    step appends one row.
    """

    rows: tuple[GenerationStats, ...]
    penalty_weight: float
    min_declared_per_group: int

    def best_series(self) -> list[float]:
        return [r.best_fitness for r in self.rows]

    def mean_series(self) -> list[float]:
        return [r.mean_fitness for r in self.rows]

    def to_csv(self) -> str:
        """Deterministic serialization; wall clock deliberately excluded."""
        lines = ["generation,best,mean"]
        lines += [f"{r.generation},{r.best_fitness!r},{r.mean_fitness!r}" for r in self.rows]
        return "\n".join(lines) + "\n"

    def to_json_dict(self) -> dict:
        return {
            "penalty_weight": self.penalty_weight,
            "min_declared_per_group": self.min_declared_per_group,
            "rows": [
                {
                    "generation": r.generation,
                    "best": r.best_fitness,
                    "mean": r.mean_fitness,
                    "best_digest": r.best_digest,
                    "wall_clock": r.wall_clock,
                }
                for r in self.rows
            ],
        }


def chromosome_to_json_dict(chromosome: GroupingChromosome, config: GaConfig) -> dict:
    return {
        "labels": list(chromosome.genes),
        "fitness": chromosome.fitness,
        "config_digest": config_digest(config),
    }


def chromosome_from_json_dict(doc: dict) -> GroupingChromosome:
    try:
        genes = tuple(int(v) for v in doc["labels"])
    except (KeyError, TypeError, ValueError):
        raise ValidationError("grouping document needs an integer 'labels' list") from None
    fitness = doc.get("fitness")
    return GroupingChromosome(genes=genes, fitness=float(fitness) if fitness is not None else None)


# ---------------------------------------------------------------------------
# Fitness
# ---------------------------------------------------------------------------


class FitnessEvaluator:
    """Caches fitness parts for one (dataset, declarations, config) triple.

    In simulation mode (full current votes available) the objective is
    the forecast error against the true totals. In live mode a held-out
    fifth of the declared stations serves as ground truth: they are
    forecast from the remaining declarations and scored against their
    actual reported votes, station by station.
    """

    def __init__(self, dataset: Dataset, declarations: DeclarationState, config: GaConfig):
        self.dataset = dataset
        self.declarations = declarations
        self.config = config
        self.min_declared = (
            config.min_declared_per_group
            if config.min_declared_per_group is not None
            else dataset.parties.n_ref + 2
        )
        self.penalty_weight = config.penalty_weight
        self._cache: dict[tuple[int, ...], tuple[float, float]] = {}
        self._declared_mask = np.array(
            [st.id in declarations.declared for st in dataset.constituencies]
        )
        self.simulation_mode = dataset.has_full_cur_votes
        if not self.simulation_mode:
            self._prepare_holdout()
        else:
            self._true_totals = dataset.true_totals()

    def _prepare_holdout(self) -> None:
        declared = sorted(self.declarations.declared)
        if len(declared) < 2:
            raise ValidationError("live-mode fitness needs at least 2 declared stations")
        k = max(1, int(round(LIVE_HOLDOUT_FRACTION * len(declared))))
        rng = np.random.default_rng(self.config.seed)
        holdout = set(rng.choice(declared, size=k, replace=False).tolist())
        self._holdout_ids = sorted(holdout)
        training_ids = frozenset(declared) - holdout
        self._training = DeclarationState(
            declared=frozenset(training_ids),
            votes={sid: self.declarations.votes[sid] for sid in training_ids},
        )

    def _violation(self, genes: np.ndarray) -> float:
        counts = np.bincount(genes[self._declared_mask], minlength=self.config.n_groups)
        return float(np.maximum(0, self.min_declared - counts[: self.config.n_groups]).sum())

    def _raw_simulation(self, genes: tuple[int, ...]) -> float:
        forecast = assemble_forecast(self.dataset, self.declarations, genes)
        return rmse(forecast.party_totals, self._true_totals, self.config.metric)

    def _raw_live(self, genes: tuple[int, ...]) -> float:
        dataset = self.dataset
        idx = dataset.station_index
        members: dict[int, list[str]] = {}
        for st, g in zip(dataset.constituencies, genes):
            members.setdefault(int(g), []).append(st.id)

        fallback = None
        holdout = set(self._holdout_ids)
        deviations: list[np.ndarray] = []
        for g, ids in members.items():
            held = [sid for sid in ids if sid in holdout]
            if not held:
                continue
            try:
                matrix = estimate_transition(dataset, self._training, ids, group_id=str(g))
            except NoDeclaredStationsError:
                if fallback is None:
                    fallback = global_transition(dataset, self._training)
                matrix = fallback
            for sid in held:
                st = dataset.constituencies[idx[sid]]
                proj = project_station(matrix, st.ref_votes, st.electorate_cur)
                actual = np.asarray(self.declarations.votes[sid], dtype=float)
                if self.config.metric == "elec":
                    proj, actual = to_elec_shares(proj), to_elec_shares(actual)
                elif self.config.metric == "vald":
                    if proj[:-1].sum() <= 0 or actual[:-1].sum() <= 0:
                        continue
                    proj, actual = to_vald_shares(proj), to_vald_shares(actual)
                deviations.append(proj - actual)
        if not deviations:
            raise ValidationError("no scorable held-out stations for live fitness")
        pooled = np.concatenate(deviations)
        return float(np.sqrt(np.mean(pooled**2)))

    def parts(self, genes: tuple[int, ...]) -> tuple[float, float]:
        """(raw forecast error, constraint violation) for a gene vector."""
        genes = tuple(int(g) for g in genes)
        hit = self._cache.get(genes)
        if hit is not None:
            return hit
        arr = np.asarray(genes, dtype=int)
        raw = self._raw_simulation(genes) if self.simulation_mode else self._raw_live(genes)
        result = (raw, self._violation(arr))
        self._cache[genes] = result
        return result

    def fitness(self, genes: tuple[int, ...]) -> float:
        raw, violation = self.parts(genes)
        weight = self.penalty_weight if self.penalty_weight is not None else 0.0
        return raw + weight * violation


def fitness(
    chromosome: GroupingChromosome,
    dataset: Dataset,
    declarations: DeclarationState,
    config: GaConfig,
) -> float:
    """Forecast error of one grouping plus group-size penalties.

    A ``penalty_weight`` of None contributes no penalty here; inside
    :func:`run` it is resolved against the initial population instead.
    """
    if len(chromosome.genes) != dataset.n_stations:
        raise ValidationError(
            f"chromosome has {len(chromosome.genes)} genes for "
            f"{dataset.n_stations} stations"
        )
    return FitnessEvaluator(dataset, declarations, config).fitness(chromosome.genes)


# ---------------------------------------------------------------------------
# Operators
# ---------------------------------------------------------------------------


def init_population(
    config: GaConfig, n_stations: int, rng: np.random.Generator | None = None
) -> list[GroupingChromosome]:
    """Uniform random grouping chromosomes, seeded from the config."""
    if rng is None:
        rng = np.random.default_rng(config.seed)
    return [
        GroupingChromosome(
            genes=tuple(int(g) for g in rng.integers(0, config.n_groups, n_stations))
        )
        for _ in range(config.population_size)
    ]


def crossover(
    parent_a: GroupingChromosome, parent_b: GroupingChromosome, rng: np.random.Generator
) -> GroupingChromosome:
    """One- or two-point crossover, picked with equal probability.

    The child copies parent A outside the cut segment and parent B
    inside it.
    """
    a, b = parent_a.genes, parent_b.genes
    if len(a) != len(b):
        raise ValidationError(f"parent lengths differ: {len(a)} vs {len(b)}")
    n = len(a)
    if n < 2:
        return GroupingChromosome(genes=a)
    two_point = n >= 3 and int(rng.integers(0, 2)) == 1
    if two_point:
        c1, c2 = sorted(int(c) + 1 for c in rng.choice(n - 1, size=2, replace=False))
        genes = a[:c1] + b[c1:c2] + a[c2:]
    else:
        cut = int(rng.integers(1, n))
        genes = a[:cut] + b[cut:]
    return GroupingChromosome(genes=genes)


def mutate(
    chromosome: GroupingChromosome,
    mutation_prob: float,
    n_groups: int,
    rng: np.random.Generator,
) -> GroupingChromosome:
    """Resample each gene uniformly over all labels with equal probability.

    Self-replacement is allowed, so the observable change rate is
    ``mutation_prob * (1 - 1/n_groups)``.
    """
    genes = np.asarray(chromosome.genes, dtype=int)
    mask = rng.random(len(genes)) < mutation_prob
    if not mask.any():
        return chromosome
    genes = genes.copy()
    genes[mask] = rng.integers(0, n_groups, int(mask.sum()))
    return GroupingChromosome(genes=tuple(int(g) for g in genes))


def _sorted_by_fitness(population: Sequence[GroupingChromosome]) -> list[GroupingChromosome]:
    if any(c.fitness is None for c in population):
        raise ValidationError("population must be fully evaluated")
    order = sorted(range(len(population)), key=lambda i: (population[i].fitness, i))
    return [population[i] for i in order]


def next_generation(
    population: Sequence[GroupingChromosome],
    dataset: Dataset,
    declarations: DeclarationState,
    config: GaConfig,
    rng: np.random.Generator,
) -> list[GroupingChromosome]:
    """Breed one generation: elites, fresh reseeds, then offspring.

    Offspring fitness is left unset; elites keep their cached value.
    Disabled operators degrade gracefully: no reseeding means more
    offspring, no crossover means children are copies of parent one,
    no mutation skips the mutation step.
    """
    size = len(population)
    ranked = _sorted_by_fitness(population)
    n_elite = int(round(config.elite_fraction * size))
    n_reseed = 0 if "reseed" in config.disabled_operators else int(
        round(config.reseed_fraction * size)
    )
    n_eligible = max(1, int(round(config.eligible_fraction * size)))
    parent_pool = ranked[: max(1, n_elite)]
    eligible_pool = ranked[:n_eligible]
    n_stations = len(ranked[0].genes)

    out: list[GroupingChromosome] = list(ranked[:n_elite])
    for _ in range(n_reseed):
        out.append(
            GroupingChromosome(
                genes=tuple(int(g) for g in rng.integers(0, config.n_groups, n_stations))
            )
        )
    while len(out) < size:
        p1 = parent_pool[int(rng.integers(0, len(parent_pool)))]
        p2 = eligible_pool[int(rng.integers(0, len(eligible_pool)))]
        if "crossover" in config.disabled_operators:
            child = GroupingChromosome(genes=p1.genes)
        else:
            child = crossover(p1, p2, rng)
        if "mutation" not in config.disabled_operators:
            child = mutate(child, config.mutation_prob, config.n_groups, rng)
        out.append(child)
    return out


# ---------------------------------------------------------------------------
# Evolution loop
# ---------------------------------------------------------------------------

EARLY_STOP_WINDOW = 100
EARLY_STOP_RELATIVE = 1e-3


def run(
    dataset: Dataset,
    declarations: DeclarationState,
    config: GaConfig,
    on_generation: Callable[[int, float], None] | None = None,
    should_stop: Callable[[], bool] | None = None,
) -> tuple[GroupingChromosome, ConvergenceTrace]:
    """Evolve groupings for the configured number of generations.

    Returns the overall best chromosome (fitness set) and the full
    convergence trace. Deterministic for a given config; the optional
    callbacks observe progress and support cooperative cancellation
    without affecting results.
    """
    rng = np.random.default_rng(config.seed)
    evaluator = FitnessEvaluator(dataset, declarations, config)
    population = init_population(config, dataset.n_stations, rng)

    t0 = time.perf_counter()
    raw_parts = [evaluator.parts(c.genes) for c in population]
    if evaluator.penalty_weight is None:
        evaluator.penalty_weight = 10.0 * min(raw for raw, _ in raw_parts)
    population = [
        replace(c, fitness=raw + evaluator.penalty_weight * violation)
        for c, (raw, violation) in zip(population, raw_parts)
    ]

    rows: list[GenerationStats] = []
    best_overall: GroupingChromosome | None = None

    def record(generation: int, pop: list[GroupingChromosome], started: float) -> None:
        nonlocal best_overall
        fits = [c.fitness for c in pop]
        i_best = min(range(len(pop)), key=lambda i: (fits[i], i))
        best = pop[i_best]
        if best_overall is None or best.fitness < best_overall.fitness:
            best_overall = best
        rows.append(
            GenerationStats(
                generation=generation,
                best_fitness=float(best.fitness),
                mean_fitness=float(np.mean(fits)),
                best_digest=best.digest(),
                wall_clock=time.perf_counter() - started,
            )
        )
        if on_generation is not None:
            on_generation(generation, float(best.fitness))

    record(0, population, t0)

    for gen in range(1, config.generations + 1):
        if should_stop is not None and should_stop():
            break
        t0 = time.perf_counter()
        population = next_generation(population, dataset, declarations, config, rng)
        population = [
            c if c.fitness is not None else replace(c, fitness=evaluator.fitness(c.genes))
            for c in population
        ]
        record(gen, population, t0)
        if config.early_stop and len(rows) > EARLY_STOP_WINDOW:
            then = rows[-1 - EARLY_STOP_WINDOW].best_fitness
            now = rows[-1].best_fitness
            if then > 0 and (then - now) / then < EARLY_STOP_RELATIVE:
                break

    trace = ConvergenceTrace(
        rows=tuple(rows),
        penalty_weight=float(evaluator.penalty_weight),
        min_declared_per_group=evaluator.min_declared,
    )
    return best_overall, trace


def ablation_study(
    dataset: Dataset,
    declarations: DeclarationState,
    config: GaConfig,
    operator_to_disable: str,
    generations: int = 200,
) -> ConvergenceTrace:
    """Run with one operator switched off, for convergence comparison."""
    if operator_to_disable not in OPERATOR_NAMES:
        raise ValidationError(
            f"unknown operator {operator_to_disable!r}; expected one of "
            f"{sorted(OPERATOR_NAMES)}"
        )
    cfg = replace(
        config,
        disabled_operators=frozenset({operator_to_disable}),
        generations=generations,
    )
    _, trace = run(dataset, declarations, cfg)
    return trace


@dataclass(frozen=True)
class MultirunSummary:
    """Distribution of generational fitness across repeated runs."""

    indicators: dict
    per_generation_sd: list[dict]
    n_runs: int

    def to_json_dict(self) -> dict:
        return {
            "n_runs": self.n_runs,
            "indicators": self.indicators,
            "per_generation_sd": self.per_generation_sd,
        }

    def sd_csv(self) -> str:
        lines = ["generation,sd_best,sd_mean"]
        lines += [
            f"{row['generation']},{row['sd_best']!r},{row['sd_mean']!r}"
            for row in self.per_generation_sd
        ]
        return "\n".join(lines) + "\n"


def _indicator_row(values: np.ndarray) -> dict:
    return {
        "min": float(values.min()),
        "median": float(np.median(values)),
        "mean": float(values.mean()),
        "max": float(values.max()),
        "st_dev": float(values.std(ddof=1)) if len(values) > 1 else 0.0,
    }


def multirun_stats(
    dataset: Dataset,
    declarations: DeclarationState,
    config: GaConfig,
    n_runs: int = 10,
    seeds: Iterable[int] | None = None,
) -> MultirunSummary:
    """Pool generational best/mean fitness over repeated seeded runs."""
    if n_runs < 2:
        raise ValidationError("multirun_stats needs n_runs >= 2")
    seed_list = list(seeds) if seeds is not None else [config.seed + i for i in range(n_runs)]
    if len(seed_list) != n_runs:
        raise ValidationError("seeds, when given, must have length n_runs")

    traces = [run(dataset, declarations, replace(config, seed=s))[1] for s in seed_list]
    horizon = min(len(t.rows) for t in traces)
    best = np.array([t.best_series()[:horizon] for t in traces])
    mean = np.array([t.mean_series()[:horizon] for t in traces])

    per_generation_sd = [
        {
            "generation": g,
            "sd_best": float(best[:, g].std(ddof=0)),
            "sd_mean": float(mean[:, g].std(ddof=0)),
        }
        for g in range(horizon)
    ]
    return MultirunSummary(
        indicators={
            "mean": _indicator_row(mean.ravel()),
            "best": _indicator_row(best.ravel()),
        },
        per_generation_sd=per_generation_sd,
        n_runs=n_runs,
    )


# ---------------------------------------------------------------------------
# Baseline
# ---------------------------------------------------------------------------


def kmeans_baseline(dataset: Dataset, n_groups: int, seed: int = 0) -> GroupingChromosome:
    """Lloyd clustering on reference electorate shares, as the scripted
    stand-in for the industry's manual grouping practice."""
    if n_groups < 1:
        raise ValidationError("n_groups must be >= 1")
    n = dataset.n_stations
    electorates = np.array([st.electorate_ref for st in dataset.constituencies], dtype=float)
    shares = np.where(
        electorates[:, None] > 0, dataset.ref_matrix / np.maximum(electorates[:, None], 1) * 100.0, 0.0
    )

    k = min(n_groups, n)
    rng = np.random.default_rng(seed)
    centroids = shares[rng.choice(n, size=k, replace=False)].copy()
    labels = np.zeros(n, dtype=int)
    for _ in range(100):
        distances = np.linalg.norm(shares[:, None, :] - centroids[None, :, :], axis=2)
        labels = distances.argmin(axis=1)
        moved = 0.0
        for j in range(k):
            members = shares[labels == j]
            if len(members) == 0:
                continue
            new_centroid = members.mean(axis=0)
            moved = max(moved, float(np.linalg.norm(new_centroid - centroids[j])))
            centroids[j] = new_centroid
        if moved < 1e-9:
            break
    return GroupingChromosome(genes=tuple(int(v) for v in labels))
