"""The evolution loop with a scripted stand-in for the chat model.

Any object with ``complete(request) -> str`` can act as the backend.  Here
a tiny scripted "model" rewrites the parent's parameters at random, which
is enough to watch the pool, the retries and the run directory at work.
Swap in ``backend="live"`` with an endpoint for a real model.
"""
import random
import re

from cpevolve import RunConfig, TspInstance, evolve
from cpevolve.tsp import serialize_tsplib


class ParameterTweaker:
    def __init__(self, seed=0):
        self.rng = random.Random(seed)

    def complete(self, request):
        code = request.meta["parent_codes"][0]
        if self.rng.random() < 0.15:
            return "Sorry, I cannot help with that."  # no code: the loop retries
        for name, lo, hi in (("population_size", 3, 12), ("spark_budget", 10, 60), ("mutation_sparks", 0, 8)):
            code = re.sub(rf"{name}=\d+", f"{name}={self.rng.randint(lo, hi)}", code, count=1)
        return f"Here is an improved version:\n```python\n{code}```\n"


rng = random.Random(7)
inst = TspInstance("demo30", [(rng.randint(0, 200), rng.randint(0, 200)) for _ in range(30)])
with open("demo30.tsp", "w") as fh:
    fh.write(serialize_tsplib(inst))

config = RunConfig(task="tsp", instance="demo30.tsp", iterations=8, tsp_eval_budget=2000, tsp_runs=2,
                   command=["{python}", "-S", "{code_file}"], run_dir="demo_out/evolve")
result = evolve(config, backend=ParameterTweaker())

for row in result.history:
    if row["type"] == "iteration":
        print(f"iteration {row['iteration']}: best {row['best_score']:.1f}, pool {row['pool']}")
print("best candidate:", result.best.id, result.best.score)
print("run directory holds history.jsonl, state.json, pool.json, code and images")
