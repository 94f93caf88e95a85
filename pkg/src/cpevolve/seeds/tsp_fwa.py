import json
import math
import operator
import random
import sys


class FireworksTSP:
    """Fireworks algorithm for the TSP on a permutation encoding.

    Design idea: better fireworks get more sparks and may reverse longer
    segments (2-opt style); the elite is additionally mutated with or-opt
    moves; selection keeps the best and favours diverse tours for the rest.
    """

    def __init__(self, coords, eval_budget, seed, population_size=8, spark_budget=40, mutation_sparks=4):
        self.dist = [
            [math.floor(math.sqrt((xi - xj) ** 2 + (yi - yj) ** 2) + 0.5) for xj, yj in coords]
            for xi, yi in coords
        ]
        self.n = len(coords)
        self.eval_budget = eval_budget
        self.population_size = population_size
        self.spark_budget = spark_budget
        self.mutation_sparks = mutation_sparks
        self.rng = random.Random(seed)
        self.created = 0

    def length(self, tour):
        d = self.dist
        total = d[tour[-1]][tour[0]]
        for a, b in zip(tour, tour[1:]):
            total += d[a][b]
        return total

    def make(self, tour):
        self.created += 1
        return {"tour": list(tour), "fitness": self.length(tour), "created": self.created - 1}

    @staticmethod
    def rank(fireworks):
        return sorted(range(len(fireworks)), key=lambda i: (fireworks[i]["fitness"], fireworks[i]["created"], i))

    def explosion_operator(self, population):
        f = [fw["fitness"] for fw in population]
        fmax = max(f)
        weights = [fmax - fi + 1e-9 for fi in f]
        total = sum(weights)
        counts = [max(1, math.floor(self.spark_budget * w / total + 0.5)) for w in weights]
        order = self.rank(population)
        excess = sum(counts) - self.spark_budget
        for i in reversed(order):
            if excess <= 0:
                break
            take = min(counts[i], excess)
            counts[i] -= take
            excess -= take
        if excess < 0:
            counts[order[0]] -= excess
        ranks = {idx: r for r, idx in enumerate(order)}
        size = len(population)
        sparks = []
        for i, fw in enumerate(population):
            n = len(fw["tour"])
            max_len = 2 + (n - 2) * (size - ranks[i]) // size
            for _ in range(counts[i]):
                seg = self.rng.randint(2, max_len)
                start = self.rng.randint(0, n - seg)
                spark = list(fw["tour"])
                spark[start:start + seg] = spark[start:start + seg][::-1]
                sparks.append(spark)
        return sparks

    def mutation_operator(self, fw):
        tour = list(fw["tour"])
        n = len(tour)
        block_len = self.rng.randint(1, 3)
        start = self.rng.randint(0, n - block_len)
        block = tour[start:start + block_len]
        rest = tour[:start] + tour[start + block_len:]
        pos = self.rng.randrange(len(rest))
        if pos >= start:
            pos += 1
        return rest[:pos] + block + rest[pos:]

    def selection_operator(self, candidates, k):
        def distance(a, b):
            return sum(map(operator.ne, a, b))

        best = self.rank(candidates)[0]
        selected = [best]
        remaining = [i for i in range(len(candidates)) if i != best]
        dist_sum = {i: distance(candidates[i]["tour"], candidates[best]["tour"]) for i in remaining}
        while len(selected) < k:
            weights = [dist_sum[i] / len(selected) for i in remaining]
            total = sum(weights)
            pick = len(remaining) - 1
            if total <= 0:
                pick = self.rng.randrange(len(remaining))
            else:
                r = self.rng.random() * total
                acc = 0.0
                for j, w in enumerate(weights):
                    acc += w
                    if r < acc:
                        pick = j
                        break
            chosen = remaining.pop(pick)
            selected.append(chosen)
            for i in remaining:
                dist_sum[i] += distance(candidates[i]["tour"], candidates[chosen]["tour"])
        return [candidates[i] for i in selected]

    def run(self):
        population = []
        for _ in range(self.population_size):
            t = list(range(self.n))
            self.rng.shuffle(t)
            population.append(self.make(t))
        evals = len(population)
        best = population[self.rank(population)[0]]
        while evals < self.eval_budget:
            sparks = self.explosion_operator(population)
            elite = population[self.rank(population)[0]]
            sparks += [self.mutation_operator(elite) for _ in range(self.mutation_sparks)]
            new = [self.make(t) for t in sparks[: self.eval_budget - evals]]
            if not new:
                break
            evals += len(new)
            for fw in new:
                if fw["fitness"] < best["fitness"]:
                    best = fw
            pool = population + new
            population = self.selection_operator(pool, min(self.population_size, len(pool)))
        return best["tour"]


def main():
    request = json.loads(sys.stdin.readline())
    solver = FireworksTSP(request["coords"], request["eval_budget"], request["seed"])
    print(json.dumps({"tour": solver.run()}), flush=True)


if __name__ == "__main__":
    main()
