"""Reference fireworks algorithm over tour permutations.

The three operators (explosion, mutation, selection) are plain callables
bundled in an :class:`OperatorSuite`, so any of them can be swapped out. The
defaults are deliberately simple: rank-proportional spark allocation with
segment-reversal sparks, or-opt mutation, and elitist distance-proportional
selection.

All randomness flows through one :class:`random.Random` seeded from
``FwaParams.rng_seed``. The seed candidate program shipped in
``cpevolve/seeds/tsp_fwa.py`` replays the exact same call sequence, which the
test-suite checks.
"""
from __future__ import annotations

import math
import operator
import random
from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

from .errors import (
    BudgetTooSmall,
    EmptyPopulation,
    InvalidPermutation,
    NotEnoughCandidates,
    TooShort,
)
from .tsp import Mode, TspInstance

EPS = 1e-9


@dataclass
class FwaParams:
    population_size: int = 8
    spark_budget: int = 40
    mutation_sparks: int = 4
    rng_seed: int = 0
    eval_budget: int = 10_000
    mode: Mode = "rounded"

    def __post_init__(self):
        if self.population_size < 1 or self.spark_budget < 1 or self.eval_budget < 1:
            raise ValueError("population_size, spark_budget and eval_budget must be positive")
        if self.mutation_sparks < 0:
            raise ValueError("mutation_sparks must be >= 0")


@dataclass
class Firework:
    tour: list[int]
    fitness: float
    created: int = 0


class OperatorSuite(NamedTuple):
    explosion: Callable[[list[Firework], FwaParams, random.Random], list[list[int]]]
    mutation: Callable[[Firework, random.Random], list[int]]
    selection: Callable[[list[Firework], int, random.Random], list[Firework]]


class FwaResult(NamedTuple):
    tour: list[int]
    length: float
    evaluations: int
    trace: list[float]


def _rank(fireworks: Sequence[Firework]) -> list[int]:
    """Indices sorted best-first; ties go to the earliest-created firework."""
    return sorted(range(len(fireworks)), key=lambda i: (fireworks[i].fitness, fireworks[i].created, i))


def spark_counts(population: Sequence[Firework], budget: int) -> list[int]:
    """Allocate ``budget`` sparks; better (shorter) fireworks get more."""
    if not population:
        raise EmptyPopulation("explosion needs at least one firework")
    f = [fw.fitness for fw in population]
    fmax = max(f)
    weights = [fmax - fi + EPS for fi in f]
    total = sum(weights)
    counts = [max(1, math.floor(budget * w / total + 0.5)) for w in weights]
    order = _rank(population)
    excess = sum(counts) - budget
    for i in reversed(order):
        if excess <= 0:
            break
        take = min(counts[i], excess)
        counts[i] -= take
        excess -= take
    if excess < 0:
        counts[order[0]] -= excess
    return counts


def default_explosion(population: list[Firework], params: FwaParams, rng: random.Random) -> list[list[int]]:
    counts = spark_counts(population, params.spark_budget)
    ranks = {idx: r for r, idx in enumerate(_rank(population))}
    size = len(population)
    sparks = []
    for i, fw in enumerate(population):
        n = len(fw.tour)
        # amplitude analogue: the segment-length cap shrinks as rank worsens
        max_len = 2 + (n - 2) * (size - ranks[i]) // size
        for _ in range(counts[i]):
            seg = rng.randint(2, max_len)
            start = rng.randint(0, n - seg)
            spark = list(fw.tour)
            spark[start:start + seg] = spark[start:start + seg][::-1]
            sparks.append(spark)
    return sparks


def default_mutation(fw: Firework, rng: random.Random) -> list[int]:
    """Or-opt: move a block of 1-3 consecutive cities elsewhere in the tour."""
    tour = list(fw.tour)
    n = len(tour)
    if n < 4:
        raise TooShort(f"or-opt mutation needs at least 4 cities, got {n}")
    block_len = rng.randint(1, 3)
    start = rng.randint(0, n - block_len)
    block = tour[start:start + block_len]
    rest = tour[:start] + tour[start + block_len:]
    pos = rng.randrange(len(rest))
    if pos >= start:
        pos += 1
    return rest[:pos] + block + rest[pos:]


def position_distance(a: Sequence[int], b: Sequence[int]) -> int:
    """Number of positions at which two tours disagree."""
    return sum(map(operator.ne, a, b))


def default_selection(candidates: list[Firework], k: int, rng: random.Random) -> list[Firework]:
    """Keep the best, then draw the rest with probability proportional to
    their mean position distance to what has already been kept."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if len(candidates) < k:
        raise NotEnoughCandidates(f"need {k} candidates, got {len(candidates)}")
    best = _rank(candidates)[0]
    selected = [best]
    remaining = [i for i in range(len(candidates)) if i != best]
    dist_sum = {i: position_distance(candidates[i].tour, candidates[best].tour) for i in remaining}
    while len(selected) < k:
        weights = [dist_sum[i] / len(selected) for i in remaining]
        total = sum(weights)
        pick = len(remaining) - 1
        if total <= 0:
            pick = rng.randrange(len(remaining))
        else:
            r = rng.random() * total
            acc = 0.0
            for j, w in enumerate(weights):
                acc += w
                if r < acc:
                    pick = j
                    break
        chosen = remaining.pop(pick)
        selected.append(chosen)
        for i in remaining:
            dist_sum[i] += position_distance(candidates[i].tour, candidates[chosen].tour)
    return [candidates[i] for i in selected]


DEFAULT_SUITE = OperatorSuite(default_explosion, default_mutation, default_selection)


class _Evaluator:
    """Validates operator output and scores it; the only source of fitness."""

    def __init__(self, inst: TspInstance, mode: Mode):
        self.inst = inst
        self.mode = mode
        self.dist = inst.matrix(mode).tolist()
        self.identity = list(range(inst.dimension))
        self.created = 0

    def check(self, tour: Sequence[int], origin: str) -> list[int]:
        try:
            t = [int(c) for c in tour]
            ok = len(t) == len(self.identity) and all(c == x for c, x in zip(tour, t)) and sorted(t) == self.identity
        except (TypeError, ValueError):
            ok = False
        if not ok:
            raise InvalidPermutation(f"{origin} operator produced an invalid tour")
        return t

    def length(self, t: list[int]) -> float:
        d = self.dist
        total = d[t[-1]][t[0]]
        for a, b in zip(t, t[1:]):
            total += d[a][b]
        return total

    def make(self, tour: Sequence[int], origin: str) -> Firework:
        t = self.check(tour, origin)
        self.created += 1
        return Firework(t, self.length(t), self.created - 1)


def run_fwa(inst: TspInstance, params: FwaParams | None = None, suite: OperatorSuite = DEFAULT_SUITE) -> FwaResult:
    """Run the fireworks algorithm until ``params.eval_budget`` tours have been scored.

    Each generation: explosion sparks, then ``mutation_sparks`` mutants of
    the current elite, then selection over population + offspring. Fitness
    is always recomputed from the tour; whatever an operator stores on a
    :class:`Firework` is ignored.
    """
    params = params or FwaParams()
    size = params.population_size
    if params.eval_budget < size:
        raise BudgetTooSmall(f"eval_budget {params.eval_budget} < population_size {size}")
    rng = random.Random(params.rng_seed)
    ev = _Evaluator(inst, params.mode)
    n = inst.dimension

    population = []
    for _ in range(size):
        t = list(range(n))
        rng.shuffle(t)
        population.append(ev.make(t, "initialisation"))
    evals = size
    best = _rank(population)[0]
    best_fw = population[best]
    trace = [best_fw.fitness]

    while evals < params.eval_budget:
        sparks = [(t, "explosion") for t in suite.explosion(population, params, rng)]
        elite = population[_rank(population)[0]]
        sparks += [(suite.mutation(elite, rng), "mutation") for _ in range(params.mutation_sparks)]
        room = params.eval_budget - evals
        new = [ev.make(t, origin) for t, origin in sparks[:room]]
        for t, origin in sparks[room:]:
            ev.check(t, origin)
        if not new:
            break
        evals += len(new)
        for fw in new:
            if fw.fitness < best_fw.fitness:
                best_fw = fw
        pool = population + new
        chosen = suite.selection(pool, min(size, len(pool)), rng)
        if not chosen:
            raise EmptyPopulation("selection operator returned no fireworks")
        population = [Firework(t, ev.length(t), fw.created) for fw in chosen for t in [ev.check(fw.tour, "selection")]]
        trace.append(best_fw.fitness)

    return FwaResult(list(best_fw.tour), best_fw.fitness, evals, trace)


def average_distance(inst: TspInstance, params: FwaParams, suite: OperatorSuite = DEFAULT_SUITE, runs: int = 3) -> float:
    """Mean best length over ``runs`` seeds ``rng_seed, rng_seed + 1, ...``."""
    lengths = []
    for r in range(runs):
        p = FwaParams(**{**params.__dict__, "rng_seed": params.rng_seed + r})
        lengths.append(run_fwa(inst, p, suite).length)
    return sum(lengths) / len(lengths)
