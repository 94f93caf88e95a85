import math
import random

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

from cpevolve.errors import BothEmpty, DegenerateVariance, EmptyCode, TooFewSamples
from cpevolve.similarity import (
    ShingleSet,
    jaccard,
    mean_sd,
    normalized_tokens,
    similarity_matrix,
    token_shingles,
    welch_t_test,
)

CODE_A = """
def explosion_operator(self, population):
    # allocate sparks by rank
    counts = [max(1, int(40 * w)) for w in weights]
    return [reverse(p, "segment") for p in population]
"""

CODE_A_RENAMED = """
def blast(me, pop):
    counts = [max(1, int(40 * weight)) for weight in ws]  # renamed everything
    return [flip(q, "other text") for q in pop]
"""


def student_t_two_sided_p(t, df):
    """Independent oracle: integrate the Student-t density from |t| to infinity."""
    df, t = mpmath.mpf(df), abs(mpmath.mpf(t))
    c = mpmath.gamma((df + 1) / 2) / (mpmath.sqrt(df * mpmath.pi) * mpmath.gamma(df / 2))
    tail = mpmath.quad(lambda x: c * (1 + x * x / df) ** (-(df + 1) / 2), [t, mpmath.inf])
    return float(2 * tail)


def test_normalization():
    toks = normalized_tokens('x = foo(3.5, "s") # note\nreturn x')
    assert toks == ["ID", "=", "ID", "(", "NUM", ",", "STR", ")", "return", "ID"]
    assert normalized_tokens("a /* block */ // line\n b") == ["ID", "ID"]


def test_renaming_and_comment_invariance():
    assert token_shingles(CODE_A) == token_shingles(CODE_A_RENAMED)
    assert jaccard(token_shingles(CODE_A), token_shingles(CODE_A_RENAMED)) == 1.0


def test_window_count():
    s = token_shingles("a + b - c * d", k=3)  # ID + ID - ID * ID: 7 tokens, all windows distinct
    assert s.token_count == 7 and len(s) == 5


def test_empty_code():
    with pytest.raises(EmptyCode):
        token_shingles("   \n\t ")
    with pytest.raises(EmptyCode):
        token_shingles("# only a comment")


def test_jaccard_examples():
    a = ShingleSet(frozenset({("a",), ("b",)}), 1, 2)
    b = ShingleSet(frozenset({("b",), ("c",)}), 1, 2)
    assert jaccard(a, b) == pytest.approx(1 / 3)
    assert jaccard(a, a) == 1.0
    assert jaccard(a, ShingleSet(frozenset({("z",)}), 1, 1)) == 0.0
    with pytest.raises(BothEmpty):
        jaccard(ShingleSet(frozenset(), 3, 1), ShingleSet(frozenset(), 3, 2))


token_lists = st.lists(st.sampled_from(["x", "+", "(", ")", "return", "1", "if", ":"]), min_size=1, max_size=40)


@given(token_lists, token_lists, st.integers(1, 4))
def test_jaccard_properties(ta, tb, k):
    a, b = token_shingles(" ".join(ta), k), token_shingles(" ".join(tb), k)
    if not len(a) and not len(b):
        return
    assert jaccard(a, b) == jaccard(b, a)
    assert 0.0 <= jaccard(a, b) <= 1.0
    if len(a):
        assert jaccard(a, a) == 1.0


def test_matrix_16():
    rng = random.Random(0)
    words = ["x", "y", "+", "-", "(", ")", "return", "for", "in", "1", "2.5", "if", ":", "="]
    codes = [" ".join(rng.choice(words) for _ in range(60)) for _ in range(16)]
    m = similarity_matrix(codes, 3, [f"c{i:02d}" for i in range(16)])
    assert m.matrix.shape == (16, 16)
    assert np.array_equal(m.matrix, m.matrix.T)
    assert np.all(np.diag(m.matrix) == 1.0)
    rows = m.to_csv().splitlines()
    assert rows[0].split(",")[1:] == m.ids and len(rows) == 17


def test_matrix_needs_two():
    with pytest.raises(ValueError):
        similarity_matrix(["x"])


def test_welch_identical_samples():
    a = [0.81, 0.92, 0.85, 0.88, 0.79]
    res = welch_t_test(a, a)
    assert res.t == 0.0 and res.p == 1.0


def test_welch_against_scipy_and_quadrature():
    rng = np.random.default_rng(3)
    for _ in range(10):
        a = rng.normal(0.88, 0.03, rng.integers(3, 20))
        b = rng.normal(0.83, 0.06, rng.integers(3, 20))
        res = welch_t_test(a, b)
        ref = stats.ttest_ind(a, b, equal_var=False)
        assert res.t == pytest.approx(ref.statistic, rel=1e-12)
        assert abs(res.p - ref.pvalue) < 1e-9
        assert abs(res.p - student_t_two_sided_p(res.t, res.df)) < 1e-6


def test_welch_far_apart():
    rng = np.random.default_rng(0)
    res = welch_t_test(rng.normal(0, 0.1, 20), rng.normal(5, 0.1, 20))
    assert res.p < 1e-3


@given(st.lists(st.floats(-100, 100), min_size=2, max_size=15), st.lists(st.floats(-100, 100), min_size=2, max_size=15))
def test_welch_antisymmetry(a, b):
    if np.var(a) + np.var(b) < 1e-9:
        return
    ab, ba = welch_t_test(a, b), welch_t_test(b, a)
    assert ab.t == pytest.approx(-ba.t, rel=1e-12, abs=1e-12)
    assert ab.p == pytest.approx(ba.p, rel=1e-12, abs=1e-15)
    assert 0.0 <= ab.p <= 1.0


def test_welch_errors():
    with pytest.raises(DegenerateVariance):
        welch_t_test([1.0, 1.0, 1.0], [1.0, 1.0])
    with pytest.raises(TooFewSamples):
        welch_t_test([1.0], [1.0, 2.0])


def test_mean_sd():
    m, sd = mean_sd([1.0, 2.0, 3.0])
    assert m == 2.0 and sd == 1.0
    assert math.isclose(mean_sd([0.5, 0.5])[1], 0.0)
