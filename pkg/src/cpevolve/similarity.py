"""Structural similarity between candidate programs.

Code is lexed with a small language-agnostic tokenizer, identifiers and
literals are normalised away, and each program becomes the set of its
k-token windows. Programs are compared by Jaccard similarity of those sets;
two groups of similarity values are compared with Welch's t-test.
"""
from __future__ import annotations

import csv
import io
import keyword
import math
import re
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
from scipy import special

from .errors import BothEmpty, DegenerateVariance, EmptyCode, TooFewSamples

# reserved words stay verbatim; every other identifier becomes ID. Only hard
# keywords qualify: anything a program may legally rename must normalise away.
KEYWORDS = frozenset(keyword.kwlist)

_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<comment>\#[^\n]*|//[^\n]*|/\*.*?\*/)
  | (?P<string>[rRbBuUfF]{0,2}(?:\"\"\"(?:\\.|[^\\])*?\"\"\"|'''(?:\\.|[^\\])*?'''|"(?:\\.|[^"\\\n])*"|'(?:\\.|[^'\\\n])*'))
  | (?P<number>(?:0[xX][0-9a-fA-F_]+|(?:\d[\d_]*\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)[jJlLuUfF]*)
  | (?P<ident>[A-Za-z_]\w*)
  | (?P<op>\*\*=?|//=?|<<=?|>>=?|->|=>|::|[-+*/%&|^!=<>]=|&&|\|\||\+\+|--|[^\s\w])
    """,
    re.VERBOSE | re.DOTALL,
)


def normalized_tokens(code: str) -> list[str]:
    tokens = []
    for m in _TOKEN.finditer(code):
        kind = m.lastgroup
        if kind in ("ws", "comment"):
            continue
        if kind == "string":
            tokens.append("STR")
        elif kind == "number":
            tokens.append("NUM")
        elif kind == "ident":
            word = m.group()
            tokens.append(word if word in KEYWORDS else "ID")
        else:
            tokens.append(m.group())
    return tokens


@dataclass(frozen=True)
class ShingleSet:
    shingles: frozenset[tuple[str, ...]]
    k: int
    token_count: int

    def __len__(self) -> int:
        return len(self.shingles)


def token_shingles(code: str, k: int = 3) -> ShingleSet:
    if k < 1:
        raise ValueError("k must be >= 1")
    tokens = normalized_tokens(code)
    if not tokens:
        raise EmptyCode("code has no tokens")
    windows = frozenset(tuple(tokens[i:i + k]) for i in range(len(tokens) - k + 1))
    return ShingleSet(windows, k, len(tokens))


def jaccard(a: ShingleSet, b: ShingleSet) -> float:
    sa, sb = getattr(a, "shingles", a), getattr(b, "shingles", b)
    union = len(sa | sb)
    if union == 0:
        raise BothEmpty("both shingle sets are empty")
    return len(sa & sb) / union


class SimilarityMatrix(NamedTuple):
    ids: list[str]
    matrix: np.ndarray

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["", *self.ids])
        for name, row in zip(self.ids, self.matrix):
            writer.writerow([name, *(f"{v:.6f}" for v in row)])
        return buf.getvalue()


def similarity_matrix(codes: Sequence[str], k: int = 3, ids: Sequence[str] | None = None) -> SimilarityMatrix:
    if len(codes) < 2:
        raise ValueError("need at least two candidates")
    ids = list(ids) if ids is not None else [f"c{i}" for i in range(len(codes))]
    if len(ids) != len(codes):
        raise ValueError("ids and codes differ in length")
    sets = [token_shingles(c, k) for c in codes]
    n = len(sets)
    mat = np.eye(n)
    for i in range(n):
        for j in range(i + 1, n):
            mat[i, j] = mat[j, i] = jaccard(sets[i], sets[j])
    return SimilarityMatrix(ids, mat)


class WelchResult(NamedTuple):
    t: float
    p: float
    df: float


def welch_t_test(sample_a: Sequence[float], sample_b: Sequence[float]) -> WelchResult:
    """Two-sided Welch unequal-variance t-test."""
    a = np.asarray(sample_a, dtype=float)
    b = np.asarray(sample_b, dtype=float)
    if a.size < 2 or b.size < 2:
        raise TooFewSamples("each sample needs at least two values")
    va, vb = a.var(ddof=1) / a.size, b.var(ddof=1) / b.size
    se2 = va + vb
    if se2 == 0:
        raise DegenerateVariance("both samples are constant")
    t = float((a.mean() - b.mean()) / math.sqrt(se2))
    df = float(se2**2 / (va**2 / (a.size - 1) + vb**2 / (b.size - 1)))
    # P(|T| >= |t|) for Student's t with df degrees of freedom
    p = float(special.betainc(df / 2.0, 0.5, df / (df + t * t)))
    return WelchResult(t, p, df)


def mean_sd(sample: Sequence[float]) -> tuple[float, float]:
    x = np.asarray(sample, dtype=float)
    return float(x.mean()), float(x.std(ddof=1)) if x.size > 1 else 0.0
