import random
from pathlib import Path

import pytest
from hypothesis import settings

from cpevolve.tsp import TspInstance

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")

FIXTURES = Path(__file__).parent / "fixtures"


def random_instance(n: int, seed: int, span: int = 100, name: str = "rand") -> TspInstance:
    rng = random.Random(seed)
    return TspInstance(f"{name}{n}-{seed}", [(rng.randint(0, span), rng.randint(0, span)) for _ in range(n)])


@pytest.fixture
def square():
    return TspInstance("square", [(0, 0), (1, 0), (1, 1), (0, 1)])
