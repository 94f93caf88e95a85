"""TSPLIB ingestion and exact tour evaluation.

Only the ``EUC_2D`` edge-weight type is supported. Distances follow the
TSPLIB convention ``nint(d) = floor(d + 0.5)``; a floating-point mode keeps
the raw Euclidean lengths so tours that tie after rounding can still be told
apart.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property
from importlib import resources
from pathlib import Path
from typing import Iterable, Literal, Sequence

import numpy as np

from .errors import (
    CoordCountMismatch,
    IndexOutOfRange,
    InvalidPermutation,
    MalformedHeader,
    NonPositiveBest,
    TooLarge,
    UnsupportedMetric,
)

Mode = Literal["rounded", "floating"]
Tour = Sequence[int]

BRUTE_FORCE_LIMIT = 10


@dataclass(frozen=True)
class TspInstance:
    name: str
    coords: tuple[tuple[float, float], ...]
    edge_weight_type: str = "EUC_2D"
    best_known: float | None = None
    comment: str = field(default="", compare=False)

    def __post_init__(self):
        object.__setattr__(self, "coords", tuple((float(x), float(y)) for x, y in self.coords))
        if len(self.coords) < 3:
            raise MalformedHeader(f"dimension must be >= 3, got {len(self.coords)}")
        if self.edge_weight_type != "EUC_2D":
            raise UnsupportedMetric(self.edge_weight_type)
        if self.best_known is not None and not self.best_known > 0:
            raise NonPositiveBest(f"best_known must be > 0, got {self.best_known}")

    @property
    def dimension(self) -> int:
        return len(self.coords)

    @cached_property
    def xy(self) -> np.ndarray:
        return np.asarray(self.coords, dtype=float)

    @cached_property
    def float_matrix(self) -> np.ndarray:
        diff = self.xy[:, None, :] - self.xy[None, :, :]
        return np.sqrt((diff**2).sum(axis=-1))

    @cached_property
    def rounded_matrix(self) -> np.ndarray:
        return np.floor(self.float_matrix + 0.5).astype(np.int64)

    def matrix(self, mode: Mode = "rounded") -> np.ndarray:
        if mode == "rounded":
            return self.rounded_matrix
        if mode == "floating":
            return self.float_matrix
        raise ValueError(f"unknown mode {mode!r}")

    def with_best_known(self, value: float | None) -> "TspInstance":
        return TspInstance(self.name, self.coords, self.edge_weight_type, value, self.comment)


def parse_tsplib(text: str) -> TspInstance:
    """Parse a TSPLIB document with a ``NODE_COORD_SECTION``.

    Node ids in the file are discarded; cities are numbered 0..n-1 in file
    order.
    """
    header: dict[str, str] = {}
    coords: list[tuple[float, float]] = []
    in_coords = False
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        if line == "EOF":
            break
        if in_coords:
            parts = line.split()
            if parts[0].endswith("_SECTION"):
                break
            try:
                if len(parts) != 3:
                    raise ValueError
                coords.append((float(parts[1]), float(parts[2])))
            except ValueError:
                raise MalformedHeader(f"line {lineno}: bad coordinate record {line!r}") from None
            continue
        if line.startswith("NODE_COORD_SECTION"):
            in_coords = True
            continue
        if line.endswith("_SECTION"):
            raise UnsupportedMetric(f"section {line} is not supported")
        key, sep, value = line.partition(":")
        if not sep:
            raise MalformedHeader(f"line {lineno}: expected 'KEY : value', got {line!r}")
        header[key.strip().upper()] = value.strip()

    if "DIMENSION" not in header:
        raise MalformedHeader("missing DIMENSION")
    try:
        dimension = int(header["DIMENSION"])
    except ValueError:
        raise MalformedHeader(f"DIMENSION is not an integer: {header['DIMENSION']!r}") from None
    if "EDGE_WEIGHT_TYPE" not in header:
        raise MalformedHeader("missing EDGE_WEIGHT_TYPE")
    metric = header["EDGE_WEIGHT_TYPE"].upper()
    if metric != "EUC_2D":
        raise UnsupportedMetric(metric)
    kind = header.get("TYPE", "TSP").split()[0].upper()
    if kind != "TSP":
        raise MalformedHeader(f"unsupported problem TYPE {kind}")
    if not in_coords:
        raise MalformedHeader("missing NODE_COORD_SECTION")
    if len(coords) != dimension:
        raise CoordCountMismatch(f"DIMENSION is {dimension} but {len(coords)} coordinates were read")
    return TspInstance(
        name=header.get("NAME", ""),
        coords=tuple(coords),
        edge_weight_type=metric,
        comment=header.get("COMMENT", ""),
    )


def _fmt(v: float) -> str:
    return str(int(v)) if float(v).is_integer() else repr(float(v))


def serialize_tsplib(inst: TspInstance) -> str:
    lines = [f"NAME : {inst.name}"]
    if inst.comment:
        lines.append(f"COMMENT : {inst.comment}")
    lines += [
        "TYPE : TSP",
        f"DIMENSION : {inst.dimension}",
        f"EDGE_WEIGHT_TYPE : {inst.edge_weight_type}",
        "NODE_COORD_SECTION",
    ]
    lines += [f"{i + 1} {_fmt(x)} {_fmt(y)}" for i, (x, y) in enumerate(inst.coords)]
    lines.append("EOF")
    return "\n".join(lines) + "\n"


def parse_best_known(text: str) -> dict[str, float]:
    """Read a ``name value`` registry; ``#`` starts a comment."""
    table: dict[str, float] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise MalformedHeader(f"registry line {lineno}: expected 'name value', got {raw!r}")
        value = float(parts[1])
        if not value > 0:
            raise NonPositiveBest(f"registry line {lineno}: {parts[0]} has value {value}")
        table[parts[0]] = value
    return table


def _data_text(name: str) -> str:
    return resources.files("cpevolve.data").joinpath(name).read_text(encoding="utf-8")


def bundled_best_known() -> dict[str, float]:
    return parse_best_known(_data_text("best_known.txt"))


def load_instance(path: str | Path, registry: dict[str, float] | None = None) -> TspInstance:
    inst = parse_tsplib(Path(path).read_text(encoding="utf-8"))
    if registry and inst.name in registry:
        inst = inst.with_best_known(registry[inst.name])
    return inst


def bundled_instance(name: str) -> TspInstance:
    """Load one of the instances shipped in ``cpevolve/data`` with its best-known length."""
    inst = parse_tsplib(_data_text(f"{name}.tsp"))
    return inst.with_best_known(bundled_best_known().get(inst.name))


def tsplib_distance(inst: TspInstance, i: int, j: int) -> int:
    n = inst.dimension
    if not (0 <= i < n and 0 <= j < n):
        raise IndexOutOfRange(f"city index out of range for n={n}: ({i}, {j})")
    (xi, yi), (xj, yj) = inst.coords[i], inst.coords[j]
    return int(math.floor(math.sqrt((xi - xj) ** 2 + (yi - yj) ** 2) + 0.5))


def check_tour(tour: Iterable[int], n: int) -> np.ndarray:
    """Return ``tour`` as an int array, raising if it is not a permutation of 0..n-1."""
    try:
        arr = np.asarray(list(tour))
    except TypeError:
        raise InvalidPermutation("tour is not a sequence") from None
    if arr.ndim != 1 or arr.size != n:
        raise InvalidPermutation(f"tour has {arr.size} entries, expected {n}")
    if arr.dtype.kind not in "iu":
        if arr.dtype.kind == "f" and np.all(arr == np.round(arr)):
            arr = arr.astype(np.int64)
        else:
            raise InvalidPermutation("tour entries must be integers")
    if not np.array_equal(np.sort(arr), np.arange(n)):
        raise InvalidPermutation("tour is not a permutation of 0..n-1")
    return arr.astype(np.int64)


def tour_length(inst: TspInstance, tour: Tour, mode: Mode = "rounded") -> float:
    t = check_tour(tour, inst.dimension)
    d = inst.matrix(mode)
    total = d[t, np.roll(t, -1)].sum()
    return int(total) if mode == "rounded" else float(total)


def relative_gap(length: float, best_known: float) -> float:
    """Percentage excess of ``length`` over ``best_known``."""
    if not best_known > 0:
        raise NonPositiveBest(f"best_known must be > 0, got {best_known}")
    return 100.0 * (length - best_known) / best_known


def brute_force_optimum(inst: TspInstance, mode: Mode = "rounded") -> tuple[list[int], float]:
    """Exhaustive search over the (n-1)!/2 distinct cycles.

    Tours are anchored at city 0 and listed with the smaller neighbour of 0
    first, so the first minimum found is the lexicographically smallest.
    """
    n = inst.dimension
    if n > BRUTE_FORCE_LIMIT:
        raise TooLarge(f"brute force is limited to {BRUTE_FORCE_LIMIT} cities, got {n}")
    d = inst.matrix(mode).tolist()
    best_order: tuple[int, ...] | None = None
    best = math.inf
    for rest in itertools.permutations(range(1, n)):
        if rest[0] > rest[-1]:
            continue
        total = d[0][rest[0]] + d[rest[-1]][0]
        for a, b in zip(rest, rest[1:]):
            total += d[a][b]
        if total < best:
            best, best_order = total, rest
    tour = [0, *best_order]
    # re-sum in tour_length's order so both agree bit-for-bit in floating mode
    return tour, tour_length(inst, tour, mode)
