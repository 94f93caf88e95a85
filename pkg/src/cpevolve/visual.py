"""Route geometry diagnostics and their PNG renderings.

Three TSP pictures (route with convex hull, crossing heatmap, hexagonal
density of edge midpoints) plus one placement picture. Every rendering is an
800x800 PNG drawn with Pillow, so identical inputs give identical bytes.
"""
from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np
from PIL import Image, ImageDraw

from .errors import KindInputMismatch, TooShort
from .tsp import TspInstance, check_tour

CANVAS = 800
PAD = 0.05
KINDS = ("route", "crossing_heatmap", "density", "placement")
TSP_KINDS = KINDS[:3]

# fixed colour ramp: cool -> hot
_RAMP = [(49, 54, 149), (69, 117, 180), (171, 217, 233), (254, 224, 144), (244, 109, 67), (165, 0, 38)]


class Hull(NamedTuple):
    vertices: list[tuple[float, float]]
    degenerate: bool


def _cross(o, a, b) -> float:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def convex_hull(points: Sequence[tuple[float, float]]) -> Hull:
    """Andrew's monotone chain; counter-clockwise, collinear boundary points dropped.

    All-collinear input gives the two extreme points with ``degenerate=True``.
    """
    pts = sorted({(float(x), float(y)) for x, y in points})
    if len(pts) < 2:
        raise ValueError("convex hull needs at least two distinct points")
    lower: list[tuple[float, float]] = []
    for p in pts:
        while len(lower) >= 2 and _cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: list[tuple[float, float]] = []
    for p in reversed(pts):
        while len(upper) >= 2 and _cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    hull = lower[:-1] + upper[:-1]
    if len(hull) < 3:
        return Hull([pts[0], pts[-1]], True)
    return Hull(hull, False)


def _tour_edges(inst: TspInstance, tour) -> tuple[np.ndarray, np.ndarray]:
    t = check_tour(tour, inst.dimension)
    xy = inst.xy
    return xy[t], xy[np.roll(t, -1)]


def _orient(a, b, c) -> np.ndarray:
    return np.sign((b[..., 0] - a[..., 0]) * (c[..., 1] - a[..., 1]) - (b[..., 1] - a[..., 1]) * (c[..., 0] - a[..., 0]))


def _on_segment(a, b, p) -> np.ndarray:
    # p is collinear with a-b; is it within the bounding box?
    return (
        (np.minimum(a[..., 0], b[..., 0]) <= p[..., 0]) & (p[..., 0] <= np.maximum(a[..., 0], b[..., 0]))
        & (np.minimum(a[..., 1], b[..., 1]) <= p[..., 1]) & (p[..., 1] <= np.maximum(a[..., 1], b[..., 1]))
    )


def crossing_pairs(inst: TspInstance, tour) -> list[tuple[int, int]]:
    """Index pairs ``(i, j)``, ``i < j``, of non-adjacent tour edges that meet.

    Edge ``i`` joins ``tour[i]`` and ``tour[i+1]``. Touching and collinear
    overlap both count as one crossing.
    """
    n = inst.dimension
    if n < 4:
        raise TooShort(f"crossing analysis needs at least 4 cities, got {n}")
    start, end = _tour_edges(inst, tour)
    i, j = np.triu_indices(n, k=2)
    keep = ~((i == 0) & (j == n - 1))
    i, j = i[keep], j[keep]
    p1, p2, q1, q2 = start[i], end[i], start[j], end[j]
    o1, o2 = _orient(p1, p2, q1), _orient(p1, p2, q2)
    o3, o4 = _orient(q1, q2, p1), _orient(q1, q2, p2)
    hit = (o1 * o2 < 0) & (o3 * o4 < 0)
    hit |= (o1 == 0) & _on_segment(p1, p2, q1)
    hit |= (o2 == 0) & _on_segment(p1, p2, q2)
    hit |= (o3 == 0) & _on_segment(q1, q2, p1)
    hit |= (o4 == 0) & _on_segment(q1, q2, p2)
    return list(zip(i[hit].tolist(), j[hit].tolist()))


def count_crossings(inst: TspInstance, tour) -> int:
    return len(crossing_pairs(inst, tour))


def edge_heat(inst: TspInstance, tour) -> np.ndarray:
    """Crossings each tour edge takes part in."""
    heat = np.zeros(inst.dimension, dtype=np.int64)
    for a, b in crossing_pairs(inst, tour):
        heat[a] += 1
        heat[b] += 1
    return heat


def default_hex_size(inst: TspInstance) -> float:
    lo, hi = inst.xy.min(axis=0), inst.xy.max(axis=0)
    diag = float(np.hypot(*(hi - lo)))
    return diag / 20.0 if diag > 0 else 1.0


class HexGrid(NamedTuple):
    """Pointy-top axial hex grid whose (0, 0) cell is centred on ``origin``."""

    origin: tuple[float, float]
    size: float

    def center(self, q: int, r: int) -> tuple[float, float]:
        s3 = math.sqrt(3.0)
        return (self.origin[0] + self.size * (s3 * q + s3 / 2.0 * r), self.origin[1] + self.size * 1.5 * r)

    def locate(self, x: float, y: float) -> tuple[int, int]:
        # the nearest lattice centre is a corner of the containing rhombus
        dx, dy = x - self.origin[0], y - self.origin[1]
        fq = (math.sqrt(3.0) / 3.0 * dx - dy / 3.0) / self.size
        fr = (2.0 / 3.0 * dy) / self.size
        q0, r0 = math.floor(fq), math.floor(fr)
        best = None
        for q in (q0, q0 + 1):
            for r in (r0, r0 + 1):
                cx, cy = self.center(q, r)
                key = ((cx - x) ** 2 + (cy - y) ** 2, q, r)
                if best is None or key < best:
                    best = key
        return best[1], best[2]

    def corners(self, q: int, r: int) -> list[tuple[float, float]]:
        cx, cy = self.center(q, r)
        return [
            (cx + self.size * math.cos(math.radians(60 * k - 30)), cy + self.size * math.sin(math.radians(60 * k - 30)))
            for k in range(6)
        ]


def hex_bin_counts(inst: TspInstance, tour, hex_size: float | None = None) -> list[tuple[tuple[float, float], int]]:
    """Count tour-edge midpoints per hexagon; returns ``(centre, count)`` for non-empty cells."""
    if inst.dimension < 3:
        raise TooShort("need at least 3 cities")
    size = default_hex_size(inst) if hex_size is None else float(hex_size)
    if not size > 0:
        raise ValueError("hex_size must be > 0")
    grid = HexGrid(tuple(inst.xy.min(axis=0).tolist()), size)
    start, end = _tour_edges(inst, tour)
    mids = (start + end) / 2.0
    counts: dict[tuple[int, int], int] = {}
    for x, y in mids.tolist():
        cell = grid.locate(x, y)
        counts[cell] = counts.get(cell, 0) + 1
    return [(grid.center(q, r), c) for (q, r), c in sorted(counts.items())]


# rendering ------------------------------------------------------------------

@dataclass
class VisualArtifact:
    kind: str
    png: bytes
    width: int
    height: int
    metrics: dict[str, float] = field(default_factory=dict)

    def filename(self, candidate_id: str) -> str:
        return f"{candidate_id}_{self.kind}.png"

    def save(self, directory: str | Path, candidate_id: str) -> Path:
        path = Path(directory) / self.filename(candidate_id)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(self.png)
        return path


def ramp(t: float) -> tuple[int, int, int]:
    t = min(max(t, 0.0), 1.0) * (len(_RAMP) - 1)
    i = min(int(t), len(_RAMP) - 2)
    f = t - i
    a, b = _RAMP[i], _RAMP[i + 1]
    return tuple(int(round(a[k] + (b[k] - a[k]) * f)) for k in range(3))


class _Frame:
    """World-to-pixel map for a bounding box padded by 5% and kept square."""

    def __init__(self, lo, hi):
        lo, hi = np.asarray(lo, float), np.asarray(hi, float)
        span = np.maximum(hi - lo, 1e-9)
        side = float(span.max()) * (1 + 2 * PAD)
        centre = (lo + hi) / 2.0
        self.lo = centre - side / 2.0
        self.scale = CANVAS / side

    def __call__(self, x: float, y: float) -> tuple[float, float]:
        return ((x - self.lo[0]) * self.scale, CANVAS - (y - self.lo[1]) * self.scale)


def _png(img: Image.Image) -> bytes:
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return buf.getvalue()


def _canvas():
    img = Image.new("RGB", (CANVAS, CANVAS), (255, 255, 255))
    return img, ImageDraw.Draw(img)


def _tsp_frame(inst: TspInstance) -> _Frame:
    return _Frame(inst.xy.min(axis=0), inst.xy.max(axis=0))


def _draw_cities(draw, frame, inst, radius=3):
    for x, y in inst.coords:
        px, py = frame(x, y)
        draw.ellipse([px - radius, py - radius, px + radius, py + radius], fill=(20, 20, 20))


def _render_route(inst, tour):
    img, draw = _canvas()
    frame = _tsp_frame(inst)
    hull = convex_hull(inst.coords)
    hull_px = [frame(x, y) for x, y in hull.vertices]
    if hull.degenerate:
        draw.line(hull_px, fill=(214, 39, 40), width=2)
    else:
        draw.polygon(hull_px, outline=(214, 39, 40), fill=(255, 240, 240))
    t = check_tour(tour, inst.dimension).tolist()
    pts = [frame(*inst.coords[c]) for c in t + t[:1]]
    draw.line(pts, fill=(31, 119, 180), width=2)
    _draw_cities(draw, frame, inst)
    return img, {"hull_size": len(hull.vertices)}


def _render_crossings(inst, tour):
    img, draw = _canvas()
    frame = _tsp_frame(inst)
    heat = edge_heat(inst, tour)
    top = int(heat.max()) if heat.size else 0
    start, end = _tour_edges(inst, tour)
    # hot edges last so they stay visible
    for e in np.argsort(heat, kind="stable"):
        colour = (190, 190, 190) if heat[e] == 0 else ramp(heat[e] / top)
        width = 2 if heat[e] == 0 else 3 + int(3 * heat[e] / top)
        draw.line([frame(*start[e]), frame(*end[e])], fill=colour, width=width)
    _draw_cities(draw, frame, inst, radius=2)
    return img, {"crossing_count": int(heat.sum() // 2), "max_edge_heat": top}


def _render_density(inst, tour, hex_size):
    img, draw = _canvas()
    frame = _tsp_frame(inst)
    size = default_hex_size(inst) if hex_size is None else float(hex_size)
    grid = HexGrid(tuple(inst.xy.min(axis=0).tolist()), size)
    bins = hex_bin_counts(inst, tour, size)
    top = max(c for _, c in bins)
    for centre, count in bins:
        q, r = grid.locate(*centre)
        draw.polygon([frame(x, y) for x, y in grid.corners(q, r)], fill=ramp(count / top), outline=(255, 255, 255))
    t = check_tour(tour, inst.dimension).tolist()
    draw.line([frame(*inst.coords[c]) for c in t + t[:1]], fill=(60, 60, 60), width=1)
    return img, {"nonzero_bins": len(bins), "max_count": top}


def _render_placement(prob, coords):
    from .placement import bin_occupancy

    img, draw = _canvas()
    W, H = prob.region
    frame = _Frame((0.0, 0.0), (W, H))
    occ, cap = bin_occupancy(prob, coords)
    over = np.maximum(occ - cap, 0.0)
    top = float(over.max())
    nbx, nby = occ.shape
    for i in range(nbx):
        for j in range(nby):
            if over[i, j] > 0:
                x0, y0 = i * prob.bin_size, j * prob.bin_size
                x1, y1 = min(x0 + prob.bin_size, W), min(y0 + prob.bin_size, H)
                (a, b), (c, d) = frame(x0, y1), frame(x1, y0)
                draw.rectangle([a, b, c, d], fill=ramp(0.55 + 0.45 * over[i, j] / top))
    a, b = frame(0.0, H)
    c, d = frame(W, 0.0)
    draw.rectangle([a, b, c, d], outline=(0, 0, 0), width=2)
    m = prob.num_cells
    for k in range(m):
        w, h = prob.cells[k]
        x, y = coords[k], coords[m + k]
        (a, b), (c, d) = frame(x - w / 2, y + h / 2), frame(x + w / 2, y - h / 2)
        draw.rectangle([a, b, c, d], outline=(31, 119, 180), fill=(174, 199, 232))
    return img, {"overflow_bins": int(np.count_nonzero(over))}


def render_artifact(kind: str, *, inst: TspInstance | None = None, tour=None, prob=None, coords=None,
                    hex_size: float | None = None) -> VisualArtifact:
    """Render one diagnostic picture.

    TSP kinds (``route``, ``crossing_heatmap``, ``density``) take ``inst`` and
    ``tour``; ``placement`` takes ``prob`` and ``coords``.
    """
    if kind in TSP_KINDS:
        if inst is None or tour is None or prob is not None or coords is not None:
            raise KindInputMismatch(f"{kind} needs inst= and tour= only")
        if kind == "route":
            img, metrics = _render_route(inst, tour)
        elif kind == "crossing_heatmap":
            img, metrics = _render_crossings(inst, tour)
        else:
            img, metrics = _render_density(inst, tour, hex_size)
    elif kind == "placement":
        if prob is None or coords is None or inst is not None or tour is not None:
            raise KindInputMismatch("placement needs prob= and coords= only")
        img, metrics = _render_placement(prob, np.asarray(coords, dtype=float))
    else:
        raise KindInputMismatch(f"unknown artifact kind {kind!r}")
    return VisualArtifact(kind, _png(img), img.width, img.height, metrics)


def render_tsp_artifacts(inst: TspInstance, tour, hex_size: float | None = None) -> list[VisualArtifact]:
    return [render_artifact(k, inst=inst, tour=tour, hex_size=hex_size) for k in TSP_KINDS]
