"""The three diagnostic images shown to the model for a TSP candidate.

A random tour and an optimized tour are rendered side by side: the route,
a heatmap of crossing edges and a hexbin density view.  The PNGs are
written to ``demo_out/``.
"""
import random
from pathlib import Path

from cpevolve import FwaParams, bundled_instance, count_crossings, render_artifact, run_fwa
from cpevolve.visual import render_tsp_artifacts

out = Path("demo_out")
out.mkdir(exist_ok=True)
inst = bundled_instance("eil51")

shuffled = list(range(inst.dimension))
random.Random(0).shuffle(shuffled)
optimized = run_fwa(inst, FwaParams(rng_seed=0, eval_budget=30_000)).tour

for name, tour in (("random", shuffled), ("fwa", optimized)):
    print(f"{name}: {count_crossings(inst, tour)} crossing edge pairs")
    for art in render_tsp_artifacts(inst, tour):
        path = art.save(out, name)
        print(f"  {path}  {art.metrics}")

# A single kind can also be rendered on its own.
route = render_artifact("route", inst=inst, tour=optimized)
print("route PNG bytes:", len(route.png))
