"""Bit-string genetic algorithm for surrogate hyperparameter search."""

from __future__ import annotations

import math
from concurrent.futures import Executor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import LengthMismatch, NonFiniteLoss, ValidationError
from .stationarity import forward_chain_folds, make_windows


@dataclass(frozen=True)
class Bound:
    low: float
    high: float
    integer: bool = False

    def __post_init__(self):
        if not self.high >= self.low:
            raise ValidationError("bound high must be >= low")


# neurons and window size for the deep models
NEURAL_SEARCH_SPACE = {"neurons": Bound(1, 128, True), "window_size": Bound(1, 30, True)}


@dataclass
class GaConfig:
    population_size: int = 10
    generations: int = 45
    gene_length: int = 10
    crossover_rate: float = 0.9
    mutation_rate: float | None = None  # None: 1 / genome length
    tournament_size: int = 3
    elitism: int = 1
    seed: int = 0
    search_space: dict = field(default_factory=lambda: dict(NEURAL_SEARCH_SPACE))

    def __post_init__(self):
        if self.population_size < 2:
            raise ValidationError("population must have at least 2 individuals")
        if self.generations < 1 or self.gene_length < 1:
            raise ValidationError("generations and gene_length must be positive")
        if not 0 <= self.crossover_rate <= 1:
            raise ValidationError("crossover_rate must lie in [0, 1]")
        if self.mutation_rate is not None and not 0 <= self.mutation_rate <= 1:
            raise ValidationError("mutation_rate must lie in [0, 1]")
        if self.tournament_size < 1:
            raise ValidationError("tournament_size must be positive")
        if not 0 <= self.elitism < self.population_size:
            raise ValidationError("elitism must be smaller than the population")
        if not self.search_space:
            raise ValidationError("empty search space")

    @property
    def genome_length(self) -> int:
        return self.gene_length * len(self.search_space)

    @property
    def effective_mutation_rate(self) -> float:
        return 1.0 / self.genome_length if self.mutation_rate is None else self.mutation_rate


@dataclass
class GaResult:
    best_genome: np.ndarray
    best_hyperparameters: dict
    best_fitness: float
    history: list  # (generation, best, mean)
    evaluations: int


def decode(genome, search_space: dict, gene_length: int = 10) -> dict:
    """Read each ``gene_length``-bit segment big-endian and map it linearly onto its bound."""
    bits = np.asarray(genome, dtype=np.int64)
    if len(bits) != gene_length * len(search_space):
        raise LengthMismatch(f"genome has {len(bits)} bits, expected {gene_length * len(search_space)}")
    top = (1 << gene_length) - 1
    weights = 1 << np.arange(gene_length - 1, -1, -1, dtype=np.int64)
    out = {}
    for k, (name, bound) in enumerate(search_space.items()):
        v = int(bits[k * gene_length:(k + 1) * gene_length] @ weights)
        x = bound.low + v * (bound.high - bound.low) / top
        out[name] = int(math.floor(x + 0.5)) if bound.integer else float(x)
    return out


def tournament_select(population, fitnesses, rng, size: int = 3) -> np.ndarray:
    """Best (lowest fitness) of ``size`` individuals drawn with replacement."""
    idx = rng.integers(0, len(population), size=size)
    winner = idx[int(np.argmin(np.asarray(fitnesses)[idx]))]
    return population[winner]


def crossover(a, b, rng, rate: float = 1.0, cut: int | None = None):
    """Single-point crossover with probability ``rate``; otherwise the parents are cloned."""
    a = np.asarray(a)
    b = np.asarray(b)
    if len(a) != len(b):
        raise LengthMismatch("parents differ in length")
    if cut is None:
        if len(a) < 2 or rng.random() >= rate:
            return a.copy(), b.copy()
        cut = int(rng.integers(1, len(a)))
    return np.concatenate([a[:cut], b[cut:]]), np.concatenate([b[:cut], a[cut:]])


def mutate(genome, rate: float, rng) -> np.ndarray:
    g = np.asarray(genome)
    flips = rng.random(len(g)) < rate
    return np.where(flips, 1 - g, g).astype(g.dtype)


def run_ga(config: GaConfig, fitness_function: Callable[[np.ndarray], float],
           executor: Executor | None = None) -> GaResult:
    """Generational GA minimizing ``fitness_function(genome)``.

    The best ``config.elitism`` individuals carry over unchanged. Fitness values
    are cached per genome. With an ``executor`` the evaluations of a generation
    run concurrently; results are gathered in index order so the outcome does
    not depend on completion order.
    """
    rng = np.random.default_rng(config.seed)
    L = config.genome_length
    rate = config.effective_mutation_rate
    cache: dict = {}

    def evaluate(pop):
        keys = [g.tobytes() for g in pop]
        todo = [i for i, k in enumerate(keys) if k not in cache]
        # dedupe within the generation before dispatch
        uniq = list(dict.fromkeys(keys[i] for i in todo))
        genomes = {keys[i]: pop[i] for i in todo}
        if executor is not None and uniq:
            vals = list(executor.map(fitness_function, [genomes[k] for k in uniq]))
        else:
            vals = [fitness_function(genomes[k]) for k in uniq]
        for k, v in zip(uniq, vals):
            v = float(v)
            cache[k] = math.inf if math.isnan(v) else v
        return np.array([cache[k] for k in keys])

    pop = [rng.integers(0, 2, size=L).astype(np.int8) for _ in range(config.population_size)]
    fit = evaluate(pop)
    history = []
    for gen in range(1, config.generations + 1):
        order = np.argsort(fit, kind="stable")
        nxt = [pop[i].copy() for i in order[:config.elitism]]
        while len(nxt) < config.population_size:
            p1 = tournament_select(pop, fit, rng, config.tournament_size)
            p2 = tournament_select(pop, fit, rng, config.tournament_size)
            c1, c2 = crossover(p1, p2, rng, config.crossover_rate)
            nxt.append(mutate(c1, rate, rng))
            if len(nxt) < config.population_size:
                nxt.append(mutate(c2, rate, rng))
        pop = nxt
        fit = evaluate(pop)
        finite = fit[np.isfinite(fit)]
        history.append((gen, float(fit.min()), float(finite.mean()) if len(finite) else math.inf))
    best = int(np.argmin(fit))
    return GaResult(pop[best].copy(), decode(pop[best], config.search_space, config.gene_length),
                    float(fit[best]), history, len(cache))


def evaluate_fitness(hyperparameters: dict, series, k: int = 10, fit_fn=None, seed: int = 0) -> float:
    """Mean validation RMSE over ``k`` forward-chained folds of the training series.

    ``series`` must already be transformed (differenced, scaled) and must not
    contain test data. ``fit_fn(hyperparameters, train, valid, seed)`` returns an
    object with ``predict_batch``; the fold index is mixed into its seed. A fold
    whose training diverges scores +inf.
    """
    w = int(hyperparameters["window_size"])
    ds = make_windows(series, w)
    folds = forward_chain_folds(len(ds), k)
    if fit_fn is None:
        fit_fn = _default_fit
    scores = []
    for j, (tr, va) in enumerate(folds):
        try:
            model = fit_fn(hyperparameters, ds.subset(tr), ds.subset(va), seed * 1000003 + j)
            pred = np.asarray(model.predict_batch(ds.inputs[va]), dtype=float)
        except NonFiniteLoss:
            return math.inf
        err = math.sqrt(float(np.mean((pred - ds.targets[va]) ** 2)))
        if not math.isfinite(err):
            return math.inf
        scores.append(err)
    return float(np.mean(scores))


def _default_fit(hyperparameters, train, valid, seed):
    from .surrogates import ModelSpec, fit_model

    hp = dict(hyperparameters)
    kind = hp.pop("kind", "LSTM")
    spec = ModelSpec(kind, {**hp, "seed": seed % 2**63})
    # folds are scored on their own validation block, so no early stopping here
    return fit_model(spec, train, None)


class HyperparameterFitness:
    """Picklable genome -> CV RMSE callable for :func:`run_ga`."""

    def __init__(self, series, search_space, gene_length=10, k=10, fixed=None, seed=0):
        self.series = np.asarray(series, dtype=float)
        self.search_space = search_space
        self.gene_length = gene_length
        self.k = k
        self.fixed = dict(fixed or {})
        self.seed = seed

    def __call__(self, genome) -> float:
        hp = {**self.fixed, **decode(genome, self.search_space, self.gene_length)}
        try:
            return evaluate_fitness(hp, self.series, self.k, seed=self.seed)
        except (ValidationError,):
            # windows too long for the folds etc.
            return math.inf
