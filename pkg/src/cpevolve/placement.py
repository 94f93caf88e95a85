"""Desk-scale analytical placement.

Objective: net-weighted weighted-average (WA) wirelength plus ``lambda_``
times a quadratic bin-overflow density penalty. The optimizer is Nesterov's
method with a Barzilai-Borwein base step, and the step actually taken comes
from a pluggable *step hook* ``hook(v, g, fn, base_step) -> step``.

Coordinates are cell centres packed as ``[x_0 .. x_{m-1}, y_0 .. y_{m-1}]``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, NamedTuple

import numpy as np

from .errors import (
    DegenerateCurvature,
    DimensionMismatch,
    HookFailure,
    InvalidTheta,
    NonPositiveGamma,
)

Pin = tuple[int, float, float]
StepHook = Callable[[np.ndarray, np.ndarray, Callable[[np.ndarray], float], float], float]


@dataclass
class PlacementProblem:
    cells: np.ndarray
    region: tuple[float, float]
    nets: list[list[Pin]]
    net_weights: np.ndarray | None = None
    gamma: float = 1.0
    lambda_: float = 1.0
    bin_size: float = 4.0
    name: str = field(default="placement", compare=False)

    def __post_init__(self):
        self.cells = np.asarray(self.cells, dtype=float).reshape(-1, 2)
        self.region = (float(self.region[0]), float(self.region[1]))
        self.nets = [[(int(c), float(dx), float(dy)) for c, dx, dy in net] for net in self.nets]
        if self.net_weights is None:
            self.net_weights = np.ones(len(self.nets))
        self.net_weights = np.asarray(self.net_weights, dtype=float)
        m = len(self.cells)
        if len(self.net_weights) != len(self.nets):
            raise DimensionMismatch(f"{len(self.nets)} nets but {len(self.net_weights)} weights")
        if np.any(self.net_weights < 0):
            raise ValueError("net weights must be >= 0")
        if not self.gamma > 0:
            raise NonPositiveGamma(f"gamma must be > 0, got {self.gamma}")
        if self.lambda_ < 0:
            raise ValueError("lambda_ must be >= 0")
        if not self.bin_size > 0:
            raise ValueError("bin_size must be > 0")
        if np.any(self.cells[:, 0] > self.region[0]) or np.any(self.cells[:, 1] > self.region[1]):
            raise DimensionMismatch("a cell is larger than the region")
        for e, net in enumerate(self.nets):
            if not net:
                raise ValueError(f"net {e} has no pins")
            for c, _, _ in net:
                if not 0 <= c < m:
                    raise DimensionMismatch(f"net {e} references cell {c}, only {m} cells")

        # flat pin arrays; pins of one net are contiguous
        self.pin_cell = np.array([c for net in self.nets for c, _, _ in net], dtype=np.int64)
        self.pin_dx = np.array([dx for net in self.nets for _, dx, _ in net], dtype=float)
        self.pin_dy = np.array([dy for net in self.nets for _, _, dy in net], dtype=float)
        self.pin_net = np.repeat(np.arange(len(self.nets)), [len(net) for net in self.nets])
        self.net_start = np.concatenate([[0], np.cumsum([len(net) for net in self.nets])[:-1]]).astype(np.int64)

    @property
    def num_cells(self) -> int:
        return len(self.cells)

    def evaluate(self, coords: np.ndarray, want_gradient: bool = False):
        return objective(self, coords, want_gradient)

    def project(self, coords: np.ndarray) -> np.ndarray:
        """Clamp centres so every rectangle lies inside the region."""
        m = self.num_cells
        half = self.cells / 2.0
        out = np.array(coords, dtype=float)
        out[:m] = np.clip(out[:m], half[:, 0], self.region[0] - half[:, 0])
        out[m:] = np.clip(out[m:], half[:, 1], self.region[1] - half[:, 1])
        return out

    def inside(self, coords: np.ndarray) -> bool:
        m = self.num_cells
        half = self.cells / 2.0
        x, y = coords[:m], coords[m:]
        return bool(
            np.all(x - half[:, 0] >= 0) and np.all(x + half[:, 0] <= self.region[0])
            and np.all(y - half[:, 1] >= 0) and np.all(y + half[:, 1] <= self.region[1])
        )

    def to_json(self) -> str:
        doc = {
            "name": self.name,
            "cells": self.cells.tolist(),
            "region": list(self.region),
            "nets": [[list(p) for p in net] for net in self.nets],
            "net_weights": self.net_weights.tolist(),
            "gamma": self.gamma,
            "lambda": self.lambda_,
            "bin_size": self.bin_size,
        }
        return json.dumps(doc)

    @classmethod
    def from_json(cls, text: str) -> "PlacementProblem":
        doc = json.loads(text)
        return cls(
            cells=doc["cells"],
            region=tuple(doc["region"]),
            nets=doc["nets"],
            net_weights=doc.get("net_weights"),
            gamma=doc.get("gamma", 1.0),
            lambda_=doc.get("lambda", 1.0),
            bin_size=doc.get("bin_size", 4.0),
            name=doc.get("name", "placement"),
        )

    @classmethod
    def load(cls, path: str | Path) -> "PlacementProblem":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))


def synthetic_problem(
    num_cells: int = 100,
    num_nets: int = 150,
    max_pins: int = 5,
    seed: int = 0,
    utilization: float = 0.35,
    gamma: float | None = None,
    lambda_: float = 1.0,
    bins_per_side: int = 10,
) -> PlacementProblem:
    """Random netlist: cell sides in [1, 4], net degrees uniform in [2, max_pins].

    The square region is sized for the requested area utilization; ``gamma``
    defaults to 1/80 of the region side.
    """
    rng = np.random.default_rng(seed)
    cells = rng.uniform(1.0, 4.0, size=(num_cells, 2))
    side = math.sqrt(cells.prod(axis=1).sum() / utilization)
    side = math.ceil(side / bins_per_side) * bins_per_side
    nets = []
    for _ in range(num_nets):
        degree = int(rng.integers(2, max_pins + 1))
        members = rng.choice(num_cells, size=min(degree, num_cells), replace=False)
        net = []
        for c in members:
            dx, dy = rng.uniform(-0.5, 0.5, size=2) * cells[c]
            net.append((int(c), float(dx), float(dy)))
        nets.append(net)
    weights = np.ones(num_nets)
    return PlacementProblem(
        cells=cells,
        region=(side, side),
        nets=nets,
        net_weights=weights,
        gamma=side / 80.0 if gamma is None else gamma,
        lambda_=lambda_,
        bin_size=side / bins_per_side,
        name=f"synthetic-{num_cells}c-{num_nets}n-s{seed}",
    )


def _check_coords(prob: PlacementProblem, coords) -> np.ndarray:
    coords = np.asarray(coords, dtype=float)
    if coords.shape != (2 * prob.num_cells,):
        raise DimensionMismatch(f"expected {2 * prob.num_cells} coordinates, got shape {coords.shape}")
    return coords


def _pins(prob: PlacementProblem, coords: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    m = prob.num_cells
    return coords[:m][prob.pin_cell] + prob.pin_dx, coords[m:][prob.pin_cell] + prob.pin_dy


def _wa_axis(p: np.ndarray, prob: PlacementProblem, gamma: float, want_gradient: bool):
    net, nets = prob.pin_net, len(prob.nets)
    pmax = np.maximum.reduceat(p, prob.net_start)[net]
    pmin = np.minimum.reduceat(p, prob.net_start)[net]
    a = np.exp((p - pmax) / gamma)
    b = np.exp((pmin - p) / gamma)
    sa = np.bincount(net, a, nets)
    sb = np.bincount(net, b, nets)
    hi = np.bincount(net, p * a, nets) / sa
    lo = np.bincount(net, p * b, nets) / sb
    width = hi - lo
    if not want_gradient:
        return width, None
    d_hi = a / sa[net] * (1.0 + (p - hi[net]) / gamma)
    d_lo = b / sb[net] * (1.0 - (p - lo[net]) / gamma)
    return width, d_hi - d_lo


def wa_wirelength(prob: PlacementProblem, coords, want_gradient: bool = False, gamma: float | None = None):
    """Weighted-average wirelength ``sum_e w_e (W_x(e) + W_y(e))``.

    Each axis term is the soft-max average minus the soft-min average of the
    pin coordinates, so it tends to the net's extent as gamma -> 0. Returns
    ``(value, gradient)``; the gradient is None unless requested.
    """
    gamma = prob.gamma if gamma is None else gamma
    if not gamma > 0:
        raise NonPositiveGamma(f"gamma must be > 0, got {gamma}")
    coords = _check_coords(prob, coords)
    px, py = _pins(prob, coords)
    wx, gx = _wa_axis(px, prob, gamma, want_gradient)
    wy, gy = _wa_axis(py, prob, gamma, want_gradient)
    w = prob.net_weights
    value = float(np.dot(w, wx + wy))
    if not want_gradient:
        return value, None
    m = prob.num_cells
    pw = w[prob.pin_net]
    grad = np.concatenate([
        np.bincount(prob.pin_cell, pw * gx, m),
        np.bincount(prob.pin_cell, pw * gy, m),
    ])
    return value, grad


def weighted_hpwl(prob: PlacementProblem, coords) -> float:
    coords = _check_coords(prob, coords)
    px, py = _pins(prob, coords)
    s = prob.net_start
    span = (np.maximum.reduceat(px, s) - np.minimum.reduceat(px, s)
            + np.maximum.reduceat(py, s) - np.minimum.reduceat(py, s))
    return float(np.dot(prob.net_weights, span))


def _bin_edges(length: float, size: float) -> tuple[np.ndarray, np.ndarray]:
    count = max(1, math.ceil(length / size - 1e-12))
    lo = np.arange(count) * size
    return lo, np.minimum(lo + size, length)


def _axis_overlap(center, extent, lo, hi):
    c0 = (center - extent / 2.0)[:, None]
    c1 = (center + extent / 2.0)[:, None]
    right = np.minimum(c1, hi[None, :])
    left = np.maximum(c0, lo[None, :])
    ov = np.maximum(right - left, 0.0)
    dov = ((c1 < hi[None, :]).astype(float) - (c0 > lo[None, :]).astype(float)) * (ov > 0)
    return ov, dov


def bin_occupancy(prob: PlacementProblem, coords) -> tuple[np.ndarray, np.ndarray]:
    """Per-bin cell area and capacity, both shaped ``(bins_x, bins_y)``."""
    coords = _check_coords(prob, coords)
    m = prob.num_cells
    bx0, bx1 = _bin_edges(prob.region[0], prob.bin_size)
    by0, by1 = _bin_edges(prob.region[1], prob.bin_size)
    ox, _ = _axis_overlap(coords[:m], prob.cells[:, 0], bx0, bx1)
    oy, _ = _axis_overlap(coords[m:], prob.cells[:, 1], by0, by1)
    return ox.T @ oy, np.outer(bx1 - bx0, by1 - by0)


def density_penalty(prob: PlacementProblem, coords, want_gradient: bool = False):
    """Quadratic bin overflow ``sum_b max(0, area_b - capacity_b)^2``.

    Capacity is the bin's area (unit target density); bins on the far edges
    are truncated to the region.
    """
    coords = _check_coords(prob, coords)
    m = prob.num_cells
    bx0, bx1 = _bin_edges(prob.region[0], prob.bin_size)
    by0, by1 = _bin_edges(prob.region[1], prob.bin_size)
    ox, dox = _axis_overlap(coords[:m], prob.cells[:, 0], bx0, bx1)
    oy, doy = _axis_overlap(coords[m:], prob.cells[:, 1], by0, by1)
    over = np.maximum(ox.T @ oy - np.outer(bx1 - bx0, by1 - by0), 0.0)
    value = float(np.sum(over**2))
    if not want_gradient:
        return value, None
    g2 = 2.0 * over
    grad_x = np.sum(dox * (oy @ g2.T), axis=1)
    grad_y = np.sum(doy * (ox @ g2), axis=1)
    return value, np.concatenate([grad_x, grad_y])


def objective(prob: PlacementProblem, coords, want_gradient: bool = False):
    wl, gwl = wa_wirelength(prob, coords, want_gradient)
    dens, gd = density_penalty(prob, coords, want_gradient)
    value = wl + prob.lambda_ * dens
    if not want_gradient:
        return value, None
    return value, gwl + prob.lambda_ * gd


def bb_base_step(s, y, prev_step: float) -> float:
    """Barzilai-Borwein short step, falling back to ``min(|s|/|y|, prev_step)``
    when the curvature estimate is not positive."""
    s = np.asarray(s, dtype=float)
    y = np.asarray(y, dtype=float)
    if s.shape != y.shape:
        raise DimensionMismatch(f"s has shape {s.shape}, y has shape {y.shape}")
    yy = float(np.dot(y, y))
    if yy == 0.0:
        raise DegenerateCurvature("gradient difference is zero")
    sy = float(np.dot(s, y))
    short = sy / yy
    if short > 0 and math.isfinite(short):
        return short
    lip = math.sqrt(float(np.dot(s, s))) / math.sqrt(yy)
    step = min(lip, prev_step)
    # s == 0 gives lip == 0; keep the previous step instead
    return step if step > 0 else prev_step


def theta_update(theta: float) -> float:
    if not theta >= 1:
        raise InvalidTheta(f"theta must be >= 1, got {theta}")
    return (1.0 + math.sqrt(1.0 + 4.0 * theta * theta)) / 2.0


class AbortRun(HookFailure):
    """Raised by a hook to stop the whole run instead of falling back."""


def base_step_hook(v, g, fn, base_step):
    """The baseline step rule: take the BB base step unchanged."""
    return base_step


@dataclass
class OptimizerState:
    v: np.ndarray
    u: np.ndarray
    g: np.ndarray
    v_prev: np.ndarray | None = None
    u_prev: np.ndarray | None = None
    g_prev: np.ndarray | None = None
    theta: float = 1.0
    prev_step: float = 1.0
    k: int = 0

    @classmethod
    def start(cls, prob, coords) -> "OptimizerState":
        coords = prob.project(np.asarray(coords, dtype=float))
        _, g = prob.evaluate(coords, True)
        return cls(v=coords, u=coords.copy(), g=g)


class CappedEvaluator:
    """Objective oracle handed to a step hook; refuses calls beyond ``cap``."""

    def __init__(self, prob, cap: int):
        self.prob = prob
        self.cap = cap
        self.calls = 0

    def __call__(self, coords) -> float:
        if self.calls >= self.cap:
            raise HookFailure(f"step hook exceeded its evaluation cap of {self.cap}")
        self.calls += 1
        coords = np.asarray(coords, dtype=float)
        cells = getattr(self.prob, "num_cells", None)
        if coords.ndim != 1 or (cells is not None and coords.size != 2 * cells):
            raise HookFailure(f"evaluation point has shape {coords.shape}")
        value, _ = self.prob.evaluate(coords, False)
        return float(value)


def base_step_for(state: OptimizerState) -> float:
    if state.v_prev is None or state.g_prev is None:
        return state.prev_step
    y = state.g - state.g_prev
    if not np.any(y):
        return state.prev_step
    return bb_base_step(state.v - state.v_prev, y, state.prev_step)


def nesterov_iterate(prob, state: OptimizerState, hook: StepHook = base_step_hook, eval_cap: int = 8) -> OptimizerState:
    """One accelerated step; the hook picks the step length.

    ``prob`` needs ``evaluate(coords, want_gradient)`` and ``project(coords)``.
    Raises :class:`HookFailure` if the hook errors, exceeds ``eval_cap``
    objective calls, or returns a non-finite or non-positive step.
    """
    base = base_step_for(state)
    fn = CappedEvaluator(prob, eval_cap)
    try:
        step = hook(state.v.copy(), state.g.copy(), fn, base)
        step = float(step)
    except HookFailure:
        raise
    except Exception as exc:
        raise HookFailure(f"step hook raised {type(exc).__name__}: {exc}") from exc
    if not math.isfinite(step) or step <= 0:
        raise HookFailure(f"step hook returned invalid step {step!r}")
    u_next = prob.project(state.v - step * state.g)
    theta_next = theta_update(state.theta)
    coef = (state.theta - 1.0) / theta_next
    v_next = prob.project(u_next + coef * (u_next - state.u))
    _, g_next = prob.evaluate(v_next, True)
    return OptimizerState(
        v=v_next, u=u_next, g=g_next,
        v_prev=state.v, u_prev=state.u, g_prev=state.g,
        theta=theta_next, prev_step=step, k=state.k + 1,
    )


class TraceRow(NamedTuple):
    k: int
    whpwl: float
    objective: float
    step: float


class PlacementResult(NamedTuple):
    coords: np.ndarray
    trace: list[TraceRow]
    initial_coords: np.ndarray
    events: list[tuple[int, str]]


def initial_placement(prob: PlacementProblem, rng_seed: int) -> np.ndarray:
    rng = np.random.default_rng(rng_seed)
    half = prob.cells / 2.0
    x = rng.uniform(half[:, 0], prob.region[0] - half[:, 0])
    y = rng.uniform(half[:, 1], prob.region[1] - half[:, 1])
    return np.concatenate([x, y])


def run_placement(
    prob: PlacementProblem,
    iters: int,
    hook: StepHook = base_step_hook,
    rng_seed: int = 0,
    eval_cap: int = 8,
    on_iteration: Callable[[OptimizerState], None] | None = None,
) -> PlacementResult:
    """Optimise from a seeded uniform-random start.

    If the hook fails at some iteration, that iteration is redone with the
    base step and the failure is recorded in ``events``; :class:`AbortRun`
    propagates.
    """
    if iters < 1:
        raise ValueError("iters must be >= 1")
    start = initial_placement(prob, rng_seed)
    state = OptimizerState.start(prob, start)
    trace: list[TraceRow] = []
    events: list[tuple[int, str]] = []
    for _ in range(iters):
        try:
            state = nesterov_iterate(prob, state, hook, eval_cap)
        except AbortRun:
            raise
        except HookFailure as exc:
            events.append((state.k, str(exc)))
            state = nesterov_iterate(prob, state, base_step_hook, eval_cap)
        value, _ = prob.evaluate(state.u, False)
        trace.append(TraceRow(state.k, weighted_hpwl(prob, state.u), float(value), state.prev_step))
        if on_iteration is not None:
            on_iteration(state)
    return PlacementResult(state.u, trace, start, events)
