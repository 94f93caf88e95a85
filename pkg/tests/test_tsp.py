import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cpevolve.errors import (
    CoordCountMismatch,
    IndexOutOfRange,
    InvalidPermutation,
    MalformedHeader,
    NonPositiveBest,
    TooLarge,
    UnsupportedMetric,
)
from cpevolve.tsp import (
    TspInstance,
    brute_force_optimum,
    bundled_best_known,
    bundled_instance,
    check_tour,
    parse_best_known,
    parse_tsplib,
    relative_gap,
    serialize_tsplib,
    tour_length,
    tsplib_distance,
)

from conftest import random_instance

TINY = """NAME : tiny
COMMENT : three points
TYPE : TSP
DIMENSION : 3
EDGE_WEIGHT_TYPE : EUC_2D
NODE_COORD_SECTION
1 0 0
2 3 4
3 1 1
EOF
"""


def nint_distance(a, b):
    # TSPLIB reference: nint(sqrt(dx^2 + dy^2)) with nint(x) = (int)(x + 0.5)
    return int(math.sqrt((a[0] - b[0]) ** 2 + (a[1] - b[1]) ** 2) + 0.5)


def test_reference_distances():
    inst = parse_tsplib(TINY)
    assert tsplib_distance(inst, 0, 1) == 5
    assert tsplib_distance(inst, 0, 2) == 1
    assert tsplib_distance(inst, 1, 1) == 0


def test_eil51_bundled():
    inst = bundled_instance("eil51")
    assert inst.dimension == 51
    assert inst.best_known == 426
    # the published optimal eil51 tour (1-based)
    opt = [1, 22, 8, 26, 31, 28, 3, 36, 35, 20, 2, 29, 21, 16, 50, 34, 30, 9, 49, 10, 39, 33, 45, 15, 44, 42, 40, 19,
           41, 13, 25, 14, 24, 43, 7, 23, 48, 6, 27, 51, 46, 12, 47, 18, 4, 17, 37, 5, 38, 11, 32]
    assert tour_length(inst, [c - 1 for c in opt]) == 426


def test_parse_errors():
    with pytest.raises(UnsupportedMetric):
        parse_tsplib(TINY.replace("EUC_2D", "GEO"))
    with pytest.raises(CoordCountMismatch):
        parse_tsplib(TINY.replace("DIMENSION : 3", "DIMENSION : 4"))
    with pytest.raises(MalformedHeader):
        parse_tsplib(TINY.replace("DIMENSION : 3\n", ""))
    with pytest.raises(MalformedHeader):
        parse_tsplib(TINY.replace("3 1 1", "3 1"))
    with pytest.raises(UnsupportedMetric):
        parse_tsplib(TINY.replace("NODE_COORD_SECTION", "EDGE_WEIGHT_SECTION\nNODE_COORD_SECTION"))
    # a section after the coordinates just ends the coordinate block
    assert parse_tsplib(TINY.replace("EOF", "DISPLAY_DATA_SECTION\n1 0 0\nEOF")).dimension == 3


def test_serialize_round_trip():
    inst = random_instance(12, 3)
    back = parse_tsplib(serialize_tsplib(inst))
    assert back.coords == inst.coords and back.name == inst.name


def test_best_known_registry():
    reg = parse_best_known("# comment\neil51 426\nst70 675  # trailing\n\n")
    assert reg == {"eil51": 426, "st70": 675}
    assert bundled_best_known()["eil51"] == 426
    with pytest.raises(NonPositiveBest):
        random_instance(5, 0).with_best_known(0)


def test_index_and_permutation_errors(square):
    with pytest.raises(IndexOutOfRange):
        tsplib_distance(square, 0, 4)
    with pytest.raises(IndexOutOfRange):
        tsplib_distance(square, -1, 0)
    for bad in ([0, 0, 1, 2], [0, 1, 2], [0, 1, 2, 4], [0, 1, 2, 3, 3]):
        with pytest.raises(InvalidPermutation):
            check_tour(bad, 4)


def test_tour_length_modes(square):
    assert tour_length(square, [0, 1, 2, 3]) == 4
    assert tour_length(square, [0, 2, 1, 3], "floating") == pytest.approx(2 + 2 * math.sqrt(2))
    assert isinstance(tour_length(square, [0, 1, 2, 3]), int)


def test_relative_gap():
    assert relative_gap(437, 426) == pytest.approx(100 * 11 / 426)
    assert relative_gap(426, 426) == 0


def oracle_optimum(inst, mode):
    # independent enumeration of every permutation, no symmetry tricks
    best = None
    for perm in itertools.permutations(range(inst.dimension)):
        if perm[0] != 0:
            continue
        length = tour_length(inst, list(perm), mode)
        if best is None or length < best:
            best = length
    return best


@pytest.mark.parametrize("seed", range(5))
@pytest.mark.parametrize("mode", ["rounded", "floating"])
def test_brute_force_against_full_enumeration(seed, mode):
    inst = random_instance(7, seed)
    tour, length = brute_force_optimum(inst, mode)
    assert length == oracle_optimum(inst, mode)
    assert tour_length(inst, tour, mode) == length
    assert tour[0] == 0


def test_brute_force_limit():
    with pytest.raises(TooLarge):
        brute_force_optimum(random_instance(11, 0))


coords = st.lists(st.tuples(st.integers(-1000, 1000), st.integers(-1000, 1000)), min_size=3, max_size=25)


@given(coords)
def test_matrix_matches_scalar_reference(pts):
    inst = TspInstance("h", pts)
    m = inst.rounded_matrix
    for i in range(inst.dimension):
        for j in range(inst.dimension):
            assert m[i, j] == nint_distance(pts[i], pts[j])
    assert np.array_equal(m, m.T)


@given(coords, st.randoms(use_true_random=False))
def test_tour_length_rotation_and_reversal_invariant(pts, rnd):
    inst = TspInstance("h", pts)
    tour = list(range(inst.dimension))
    rnd.shuffle(tour)
    k = rnd.randrange(inst.dimension)
    length = tour_length(inst, tour)
    assert tour_length(inst, tour[k:] + tour[:k]) == length
    assert tour_length(inst, tour[::-1]) == length
    ref = sum(nint_distance(pts[tour[i]], pts[tour[(i + 1) % len(tour)]]) for i in range(len(tour)))
    assert length == ref
