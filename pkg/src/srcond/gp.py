"""Tree-based genetic programming with Levenberg-Marquardt local optimisation.

Generational loop: every candidate is locally optimised, parents are chosen
by tournament, offspring are produced by subtree crossover followed by
mutation, and the best individual is carried over unchanged.

Random streams are derived from ``(seed, generation, index)`` so the result
does not depend on the order in which candidates are evaluated.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import partial

import numpy as np

from .conditioning import JacobianReport, analyze
from .data import Dataset
from .diff import jacobian
from .expr import (
    ExprTree,
    FunctionSet,
    Node,
    const,
    evaluate,
    extract_parameters,
    get_function_set,
    inject_parameters,
    op,
    var,
)
from .nls import LMConfig, Termination, fit_tree
from .telemetry import CandidateRecord, aggregate_candidate

WORST_FITNESS = math.inf
CROSSOVER_TRIES = 16


@dataclass
class GPConfig:
    population_size: int = 1000
    generations: int = 100
    local_opt_iters: int = 10
    max_size: int = 50
    function_set: str = "small"
    mutation_rate: float = 0.25
    tournament_size: int = 5
    elites: int = 1
    constant_ratio: float = 0.5  # share of leaves created as constants
    seed: int = 0
    svd_method: str = "jacobi"

    def __post_init__(self):
        for name in ("population_size", "generations", "local_opt_iters", "tournament_size"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if not 0 <= self.elites < self.population_size:
            raise ValueError("elites must be in [0, population_size)")
        if not 0.0 <= self.mutation_rate <= 1.0:
            raise ValueError("mutation_rate must be in [0, 1]")
        if not 0.0 <= self.constant_ratio <= 1.0:
            raise ValueError("constant_ratio must be in [0, 1]")
        if self.max_size < 3:
            raise ValueError("max_size must be >= 3")
        get_function_set(self.function_set)

    @property
    def fset(self) -> FunctionSet:
        return get_function_set(self.function_set)


@dataclass
class Individual:
    tree: ExprTree
    fitness: float = WORST_FITNESS
    reports: list = field(default_factory=list)

    @property
    def theta(self) -> np.ndarray:
        return extract_parameters(self.tree)


def stream(seed: int, generation: int, index: int) -> np.random.Generator:
    return np.random.default_rng([seed, generation, index])


# ----------------------------------------------------------------------------
# tree creation


def _leaf(n_vars: int, constant_ratio: float, rng) -> Node:
    if rng.random() < constant_ratio:
        return const(rng.uniform(-1.0, 1.0))
    return var(int(rng.integers(n_vars)), rng.standard_normal())


def balanced_tree(size: int, fset: FunctionSet, n_vars: int, rng, constant_ratio: float = 0.5) -> list[Node]:
    """Grow a tree of at most ``size`` nodes, splitting the budget evenly
    between the children of every binary node."""

    def grow(budget: int) -> list[Node]:
        options = []
        if budget >= 2:
            options += fset.unary
        if budget >= 3:
            options += fset.binary
        if not options:
            return [_leaf(n_vars, constant_ratio, rng)]
        kind = options[int(rng.integers(len(options)))]
        rest = budget - 1
        if kind in fset.unary:
            return [op(kind)] + grow(rest)
        left = rest // 2
        right = rest - left
        if rng.random() < 0.5:
            left, right = right, left
        return [op(kind)] + grow(left) + grow(right)

    if size < 1:
        raise ValueError("size must be >= 1")
    return grow(size)


def random_tree(max_size: int, fset: FunctionSet, n_vars: int, rng, constant_ratio: float = 0.5) -> ExprTree:
    target = int(rng.integers(3, max_size + 1))
    return ExprTree(balanced_tree(target, fset, n_vars, rng, constant_ratio))


def initialize_population(config: GPConfig, dataset: Dataset) -> list[Individual]:
    fset = config.fset
    return [
        Individual(random_tree(config.max_size, fset, dataset.d, stream(config.seed, 0, i), config.constant_ratio))
        for i in range(config.population_size)
    ]


# ----------------------------------------------------------------------------
# variation


def subtree_crossover(a: ExprTree, b: ExprTree, max_size: int, rng) -> ExprTree:
    """Replace a random subtree of ``a`` with a random subtree of ``b``.

    Cut points are redrawn until the child fits ``max_size``; after
    ``CROSSOVER_TRIES`` failures ``a`` is returned unchanged.
    """
    for _ in range(CROSSOVER_TRIES):
        i = int(rng.integers(len(a)))
        j = int(rng.integers(len(b)))
        if len(a) - a.lengths[i] + b.lengths[j] <= max_size:
            return a.replace_subtree(i, b.subtree(j))
    return a


def point_mutation(tree: ExprTree, fset: FunctionSet, rng) -> ExprTree | None:
    internal = [i for i, n in enumerate(tree.nodes) if not n.is_leaf]
    if not internal:
        return None
    i = internal[int(rng.integers(len(internal)))]
    node = tree.nodes[i]
    if node.arity == 1:
        pool = fset.unary
    elif node.arity == 2:
        pool = fset.binary
    else:
        pool = tuple(f for f in ("add", "mul") if f in fset.functions)
    pool = [f for f in pool if f != node.kind]
    if not pool:
        return tree
    new = op(pool[int(rng.integers(len(pool)))], node.arity)
    return tree.replace_subtree(i, (new,) + tree.subtree(i)[1:])


def parameter_mutation(tree: ExprTree, rng) -> ExprTree | None:
    leaves = [i for i, s in enumerate(tree.slots) if s >= 0]
    if not leaves:
        return None
    i = leaves[int(rng.integers(len(leaves)))]
    node = tree.nodes[i]
    scaled = Node(node.kind, 0, node.var, node.value * rng.normal(1.0, 0.1))
    return tree.replace_subtree(i, (scaled,))


def subtree_mutation(tree: ExprTree, config: GPConfig, n_vars: int, rng) -> ExprTree:
    i = int(rng.integers(len(tree)))
    budget = config.max_size - (len(tree) - tree.lengths[i])
    target = int(rng.integers(1, budget + 1))
    return tree.replace_subtree(i, balanced_tree(target, config.fset, n_vars, rng, config.constant_ratio))


def mutate(tree: ExprTree, config: GPConfig, n_vars: int, rng) -> ExprTree:
    """With probability ``mutation_rate`` apply one of point, parameter or
    subtree mutation, chosen uniformly."""
    if config.mutation_rate <= 0.0 or rng.random() >= config.mutation_rate:
        return tree
    choice = int(rng.integers(3))
    if choice == 0:
        out = point_mutation(tree, config.fset, rng)
        if out is not None:
            return out
        choice = 1
    if choice == 1:
        out = parameter_mutation(tree, rng)
        return tree if out is None else out
    return subtree_mutation(tree, config, n_vars, rng)


def tournament(fitness: np.ndarray, size: int, rng) -> int:
    contestants = rng.integers(len(fitness), size=size)
    return int(contestants[np.argmin(fitness[contestants])])


# ----------------------------------------------------------------------------
# evaluation


def mse(tree: ExprTree, theta, dataset: Dataset) -> float:
    pred = evaluate(tree, theta, dataset.X)
    err = dataset.y - pred
    value = float(err @ err) / dataset.n
    return value if math.isfinite(value) else WORST_FITNESS


def local_optimize(ind: Individual, dataset: Dataset, lm_config: LMConfig | None = None,
                   svd_method: str = "jacobi") -> Individual:
    """LM on the individual's parameters; write back only on improvement."""
    lm_config = lm_config or LMConfig()
    tree = ind.tree
    if tree.k == 0:
        return Individual(tree, mse(tree, np.empty(0), dataset), [])
    hook = partial(analyze, method=svd_method)
    res = fit_tree(tree, dataset.X, dataset.y, config=lm_config, hook=hook)
    if res.termination is Termination.NUMERICAL_FAILURE:
        ssr = res.initial_ssr
    elif res.ssr < res.initial_ssr:
        tree = inject_parameters(tree, res.theta)
        ssr = res.ssr
    else:
        ssr = res.initial_ssr
    fitness = ssr / dataset.n if math.isfinite(ssr) else WORST_FITNESS
    return Individual(tree, fitness, res.reports)


def candidate_record(ind: Individual, generation: int, index: int) -> CandidateRecord:
    return aggregate_candidate(ind.reports, generation, index, ind.fitness, ind.tree.size, k=ind.tree.k)


@dataclass
class GPResult:
    best: Individual
    intercept: float
    slope: float
    report: JacobianReport | None  # conditioning of the final expression before scaling
    best_fitness: list[float]

    def predict(self, X) -> np.ndarray:
        return self.intercept + self.slope * evaluate(self.best.tree, self.best.theta, X)


def linear_scaling(pred: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    if not np.all(np.isfinite(pred)):
        return 0.0, 1.0
    A = np.column_stack([np.ones_like(pred), pred])
    (a, b), *_ = np.linalg.lstsq(A, y, rcond=None)
    return float(a), float(b)


def final_report(tree: ExprTree, dataset: Dataset, svd_method: str = "jacobi") -> JacobianReport | None:
    if tree.k == 0:
        return None
    J = jacobian(tree, extract_parameters(tree), dataset.X)
    if not np.all(np.isfinite(J)):
        return None
    return analyze(J, svd_method)


def evolve(config: GPConfig, dataset: Dataset, sink=None, progress=None) -> GPResult:
    """Run GP and return the best individual of the last generation.

    ``sink.log_generation(generation, records)`` receives one
    :class:`CandidateRecord` per individual and generation. ``progress`` is
    an optional callable taking ``(generation, best_fitness)``.
    """
    if dataset.n < 1:
        raise ValueError("empty dataset")
    lm_config = LMConfig(max_iterations=config.local_opt_iters)

    def optimize(ind):
        return local_optimize(ind, dataset, lm_config, config.svd_method)

    population = [optimize(ind) for ind in initialize_population(config, dataset)]
    records = [candidate_record(ind, 0, i) for i, ind in enumerate(population)]
    best_fitness = []

    def finish_generation(generation, records):
        if sink is not None:
            sink.log_generation(generation, records)
        best_fitness.append(min(ind.fitness for ind in population))
        if progress is not None:
            progress(generation, best_fitness[-1])

    finish_generation(0, records)
    for generation in range(1, config.generations):
        fitness = np.array([ind.fitness for ind in population])
        order = np.argsort(fitness, kind="stable")
        elites = [population[i] for i in order[:config.elites]]
        offspring = []
        records = []
        for index, elite in enumerate(elites):
            # the stored elite stays as is; an optimised copy supplies its telemetry
            copy = optimize(elite)
            records.append(aggregate_candidate(copy.reports, generation, index, elite.fitness, elite.tree.size,
                                               k=elite.tree.k))
            offspring.append(elite)
        for index in range(len(elites), config.population_size):
            rng = stream(config.seed, generation, index)
            a = population[tournament(fitness, config.tournament_size, rng)].tree
            b = population[tournament(fitness, config.tournament_size, rng)].tree
            child = subtree_crossover(a, b, config.max_size, rng)
            child = mutate(child, config, dataset.d, rng)
            ind = optimize(Individual(child))
            offspring.append(ind)
            records.append(candidate_record(ind, generation, index))
        population = offspring
        finish_generation(generation, records)

    best = min(population, key=lambda ind: ind.fitness)
    pred = evaluate(best.tree, best.theta, dataset.X)
    a, b = linear_scaling(pred, dataset.y)
    return GPResult(best, a, b, final_report(best.tree, dataset, config.svd_method), best_fitness)
