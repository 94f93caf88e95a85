import json
import random
import subprocess
import sys
from importlib import resources

import pytest
from hypothesis import given, strategies as st

from cpevolve.errors import BudgetTooSmall, EmptyPopulation, InvalidPermutation, NotEnoughCandidates, TooShort
from cpevolve.fwa import (
    DEFAULT_SUITE,
    Firework,
    FwaParams,
    OperatorSuite,
    average_distance,
    default_explosion,
    default_mutation,
    default_selection,
    position_distance,
    run_fwa,
    spark_counts,
)
from cpevolve.tsp import brute_force_optimum, tour_length

from conftest import random_instance


def fw(tour, fitness, created=0):
    return Firework(list(tour), fitness, created)


def is_perm(t, n):
    return sorted(t) == list(range(n))


def test_equal_fitness_splits_evenly():
    assert spark_counts([fw(range(5), 10.0), fw(range(5), 10.0)], 10) == [5, 5]


def test_single_firework_gets_everything():
    rng = random.Random(0)
    sparks = default_explosion([fw(range(9), 1.0)], FwaParams(spark_budget=17), rng)
    assert len(sparks) == 17 and all(is_perm(s, 9) for s in sparks)


def test_explosion_empty_population():
    with pytest.raises(EmptyPopulation):
        default_explosion([], FwaParams(), random.Random(0))


@given(st.lists(st.floats(0, 1e4), min_size=1, max_size=12), st.integers(1, 200))
def test_spark_counts_properties(fitness, budget):
    pop = [fw(range(4), f, i) for i, f in enumerate(fitness)]
    counts = spark_counts(pop, budget)
    assert sum(counts) == budget
    assert all(c >= 0 for c in counts)
    best = min(range(len(pop)), key=lambda i: (fitness[i], i))
    worst = max(range(len(pop)), key=lambda i: (fitness[i], -i))
    assert counts[best] >= counts[worst]


@given(st.integers(4, 30), st.integers(0, 2**32))
def test_mutation_is_a_different_permutation(n, seed):
    rng = random.Random(seed)
    tour = list(range(n))
    rng.shuffle(tour)
    out = default_mutation(fw(tour, 0.0), rng)
    assert is_perm(out, n)
    assert out != tour


def test_mutation_deterministic_and_guard():
    a = default_mutation(fw(range(10), 0.0), random.Random(5))
    b = default_mutation(fw(range(10), 0.0), random.Random(5))
    assert a == b
    with pytest.raises(TooShort):
        default_mutation(fw(range(3), 0.0), random.Random(0))


@given(st.lists(st.floats(0, 100), min_size=1, max_size=15), st.data())
def test_selection_contract(fitness, data):
    n = 8
    rng = random.Random(data.draw(st.integers(0, 1000)))
    cands = []
    for i, f in enumerate(fitness):
        t = list(range(n))
        rng.shuffle(t)
        cands.append(fw(t, f, i))
    k = data.draw(st.integers(1, len(cands)))
    out = default_selection(cands, k, rng)
    assert len(out) == k
    assert len({id(c) for c in out}) == k
    best = min(cands, key=lambda c: (c.fitness, c.created))
    assert out[0] is best
    if k == len(cands):
        assert sorted(map(id, out)) == sorted(map(id, cands))


def test_selection_errors():
    with pytest.raises(NotEnoughCandidates):
        default_selection([fw(range(4), 1.0)], 2, random.Random(0))


def test_position_distance():
    assert position_distance([0, 1, 2, 3], [0, 1, 2, 3]) == 0
    assert position_distance([0, 1, 2, 3], [1, 0, 2, 3]) == 2


def test_run_fwa_matches_brute_force_example():
    inst = random_instance(8, 7)
    res = run_fwa(inst, FwaParams(rng_seed=7, eval_budget=5000))
    assert res.length == brute_force_optimum(inst)[1]
    assert tour_length(inst, res.tour) == res.length
    assert res.evaluations == 5000


def test_budget_equal_to_population_is_initial_best():
    inst = random_instance(12, 1)
    params = FwaParams(eval_budget=8, rng_seed=3)
    res = run_fwa(inst, params)
    rng = random.Random(3)
    initial = []
    for _ in range(8):
        t = list(range(12))
        rng.shuffle(t)
        initial.append(tour_length(inst, t))
    assert res.length == min(initial)
    assert res.evaluations == 8 and len(res.trace) == 1


def test_budget_too_small():
    with pytest.raises(BudgetTooSmall):
        run_fwa(random_instance(10, 0), FwaParams(eval_budget=4))


def test_determinism_and_trace_monotone():
    inst = random_instance(20, 2)
    a = run_fwa(inst, FwaParams(rng_seed=11, eval_budget=3000))
    b = run_fwa(inst, FwaParams(rng_seed=11, eval_budget=3000))
    assert a == b
    assert all(x >= y for x, y in zip(a.trace, a.trace[1:]))
    assert a.evaluations <= 3000


def test_engine_ignores_operator_fitness():
    inst = random_instance(10, 4)

    def lying_selection(cands, k, rng):
        out = default_selection(cands, k, rng)
        return [Firework(c.tour, -1e9, c.created) for c in out]

    res = run_fwa(inst, FwaParams(eval_budget=500), OperatorSuite(default_explosion, default_mutation, lying_selection))
    assert res.length == tour_length(inst, res.tour) > 0


@pytest.mark.parametrize("which", ["explosion", "mutation", "selection"])
def test_invalid_operator_output_is_named(which):
    inst = random_instance(10, 4)

    def bad_explosion(pop, params, rng):
        return [[0] * 10]

    def bad_mutation(f, rng):
        return [0, 1, 2]

    def bad_selection(cands, k, rng):
        return [Firework([0] * 10, 0.0, 0)]

    suite = {
        "explosion": DEFAULT_SUITE._replace(explosion=bad_explosion),
        "mutation": DEFAULT_SUITE._replace(mutation=bad_mutation),
        "selection": DEFAULT_SUITE._replace(selection=bad_selection),
    }[which]
    with pytest.raises(InvalidPermutation, match=which):
        run_fwa(inst, FwaParams(eval_budget=200), suite)


def test_null_suite_terminates():
    inst = random_instance(10, 5)

    def explode(pop, params, rng):
        return [list(f.tour) for f in pop]

    def mutate(f, rng):
        t = list(f.tour)
        t[0], t[1] = t[1], t[0]
        return t

    def select(cands, k, rng):
        return cands[:k]

    res = run_fwa(inst, FwaParams(eval_budget=300), OperatorSuite(explode, mutate, select))
    assert res.evaluations == 300


def test_average_distance_is_mean_of_seeds():
    inst = random_instance(15, 6)
    params = FwaParams(rng_seed=2, eval_budget=400)
    expected = sum(run_fwa(inst, FwaParams(rng_seed=s, eval_budget=400)).length for s in (2, 3, 4)) / 3
    assert average_distance(inst, params, runs=3) == expected


def test_seed_program_replays_engine():
    inst = random_instance(30, 9)
    code = resources.files("cpevolve.seeds").joinpath("tsp_fwa.py").read_text(encoding="utf-8")
    request = {"task": "tsp", "coords": [list(c) for c in inst.coords], "eval_budget": 2000, "seed": 5}
    out = subprocess.run([sys.executable, "-c", code], input=json.dumps(request) + "\n",
                         capture_output=True, text=True, timeout=60)
    assert out.returncode == 0, out.stderr
    tour = json.loads(out.stdout)["tour"]
    assert tour == run_fwa(inst, FwaParams(rng_seed=5, eval_budget=2000)).tour
