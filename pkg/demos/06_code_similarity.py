"""How alike are the surviving candidates?

Code is normalized (identifiers, literals and comments collapsed), cut into
token 3-grams and compared with Jaccard similarity.  Run demo 05 first; its
pool is read from ``demo_out/evolve/pool.json``.

The scripted model of demo 05 only changes numbers, so its pool is a single
structure.  Two hand-edited variants show what a structural change does.
"""
from pathlib import Path

import numpy as np

from cpevolve import Pool, similarity_matrix, welch_t_test
from cpevolve.similarity import mean_sd

pool = Pool.from_json(Path("demo_out/evolve/pool.json").read_text())
seed = pool.members[0].code

# truncation selection instead of the distance-proportional draw
truncation = seed.replace(
    "    def selection_operator(self, candidates, k):",
    "    def selection_operator(self, candidates, k):\n"
    "        return [candidates[i] for i in self.rank(candidates)[:k]]\n\n"
    "    def old_selection_operator(self, candidates, k):",
)
# no elite mutation at all
no_mutation = seed.replace(
    "            sparks += [self.mutation_operator(elite) for _ in range(self.mutation_sparks)]\n", "")

ids = [c.id for c in pool.members] + ["truncation", "no_mutation"]
m = similarity_matrix([c.code for c in pool.members] + [truncation, no_mutation], ids=ids)
print(m.to_csv())

# Compare two groups of similarity values: pool pairs vs. pairs involving an edited variant.
k = len(pool.members)
within = m.matrix[:k, :k][np.triu_indices(k, 1)]
across = m.matrix[:k, k:].ravel()
for name, sample in (("within pool", within), ("pool vs edited", across)):
    mean, sd = mean_sd(sample)
    print(f"{name}: {mean:.3f} ± {sd:.3f} (n={len(sample)})")
if np.ptp(within) > 0 or np.ptp(across) > 0:
    res = welch_t_test(list(within), list(across))
    print(f"Welch t = {res.t:.3f}, df = {res.df:.1f}, p = {res.p:.4g}")
else:
    print("both groups have zero variance; the t-test is undefined")
