"""Baseline fireworks search on TSPLIB instances.

Before evolving anything it helps to know what the hand-written operators
achieve.  We check the engine against exhaustive search on a tiny instance,
then measure the gap to the best-known tour on the bundled eil51.
"""
import random
import time

from cpevolve import FwaParams, TspInstance, brute_force_optimum, bundled_instance, relative_gap, run_fwa

# An 8-city instance is small enough to enumerate every tour.
rng = random.Random(3)
tiny = TspInstance("tiny8", [(rng.randint(0, 100), rng.randint(0, 100)) for _ in range(8)])
oracle_tour, oracle_length = brute_force_optimum(tiny)
fwa = run_fwa(tiny, FwaParams(rng_seed=0, eval_budget=5000))
print(f"tiny8: exhaustive optimum {oracle_length:g}, fireworks {fwa.length:g}")

# On eil51 the operators leave a small gap; the evolution loop tries to close it.
eil51 = bundled_instance("eil51")
for budget in (20_000, 100_000):
    start = time.perf_counter()
    res = run_fwa(eil51, FwaParams(rng_seed=0, eval_budget=budget))
    gap = relative_gap(res.length, eil51.best_known)
    print(f"eil51 @ {budget:>7} evaluations: length {res.length:g}, gap {gap:.2f}% "
          f"({time.perf_counter() - start:.1f}s)")

# The trace records the best length after each generation.
print("first generations:", res.trace[:8])
