"""Scoring untrusted candidate programs in a subprocess.

Candidates talk line-delimited JSON over stdin/stdout.  The harness computes
the score itself, so a candidate cannot misreport it, and every failure mode
comes back as a verdict instead of an exception.
"""
from importlib import resources

from cpevolve import bundled_instance, run_step_candidate, run_tsp_candidate, synthetic_problem

inst = bundled_instance("eil51")
seed_code = resources.files("cpevolve.seeds").joinpath("tsp_fwa.py").read_text()

v = run_tsp_candidate(seed_code, inst, eval_budget=5000)
print("seed program:", v.outcome.value, v.score)

for label, code in [
    ("liar", 'import json; print(json.dumps({"tour": list(range(51)), "length": 1}))'),
    ("garbage", "print('hello')"),
    ("crash", "raise SystemExit(3)"),
    ("slow", "import time; time.sleep(30)"),
]:
    v = run_tsp_candidate(code, inst, eval_budget=5000, timeout=1.0)
    print(f"{label:>8}: {v.outcome.value:<15} score={v.score}  {v.detail[:60]}")

# Step-rule candidates answer one request per optimizer iteration.
step_seed = resources.files("cpevolve.seeds").joinpath("step_base.py").read_text()
prob = synthetic_problem(40, 60, seed=1)
v = run_step_candidate(step_seed, prob, iters=100)
print("step seed:", v.outcome.value, f"{v.score:.2f}", "fallbacks:", v.fallbacks)
