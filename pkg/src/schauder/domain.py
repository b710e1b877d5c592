"""Sampled bounded domains, grid geodesics and the quasiconvexity constant.

A domain is rasterized on a uniform grid.  Closure points are the grid points
lying in the closure of the open set, interior points those strictly inside.
Neighbouring closure points (Chebyshev distance one in grid indices) are joined
when the midpoint of the segment stays in the closure.  Shortest paths in that
graph stand in for the infimum of arc lengths; they overestimate Euclidean
length on convex sets by at most the octile factor (about 1.0824 in 2D).
"""
from __future__ import annotations

import hashlib
import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components, dijkstra
from scipy.spatial import ConvexHull
from scipy.spatial.distance import cdist, pdist

from .errors import DomainError, NoPathError

SHAPE_KINDS = ("interval", "box", "l_shape", "disc", "predicate_grid")

# 2D 8-neighbour shortest paths exceed straight segments by at most this factor
OCTILE_FACTOR_2D = math.sqrt(4.0 - 2.0 * math.sqrt(2.0))

_ROUND_DECIMALS = 12
_APSP_CHUNK = 256


@dataclass(frozen=True)
class ShapeSpec:
    """Description of a bounded open region.

    ``bounds`` is one ``(lo, hi)`` pair per axis and fixes the sampling box.
    Kind-specific parameters:

    * ``l_shape``: ``notch`` -- closed box removed from the open outer box.
    * ``disc``: ``center`` and ``radius`` (bounds derived when omitted).
    * ``predicate_grid``: either ``predicate`` (callable taking an ``(N, n)``
      array and returning open-set membership) or ``boxes``, a list of open
      boxes whose union is the region.
    """

    kind: str
    bounds: tuple = ()
    notch: Optional[tuple] = None
    center: Optional[tuple] = None
    radius: Optional[float] = None
    boxes: Optional[tuple] = None
    predicate: Optional[Callable[[np.ndarray], np.ndarray]] = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind not in SHAPE_KINDS:
            raise DomainError(f"unknown shape kind {self.kind!r}")
        if self.kind == "disc":
            if self.radius is None or self.radius <= 0 or self.center is None:
                raise DomainError("disc needs a center and a positive radius")
            if not self.bounds:
                b = tuple((c - self.radius, c + self.radius) for c in self.center)
                object.__setattr__(self, "bounds", b)
        bounds = tuple((float(lo), float(hi)) for lo, hi in self.bounds)
        object.__setattr__(self, "bounds", bounds)
        if not bounds or any(not (hi > lo) for lo, hi in bounds):
            raise DomainError("bounds must define a nonempty bounded region")
        if self.kind == "l_shape" and self.notch is None:
            raise DomainError("l_shape needs a notch box")
        if self.kind == "predicate_grid" and self.predicate is None and not self.boxes:
            raise DomainError("predicate_grid needs a predicate or a list of boxes")

    @property
    def dimension(self) -> int:
        return len(self.bounds)

    def contains_open(self, x: np.ndarray) -> np.ndarray:
        """Membership of the rows of ``x`` in the open set."""
        x = np.atleast_2d(x)
        lo = np.array([b[0] for b in self.bounds])
        hi = np.array([b[1] for b in self.bounds])
        if self.kind in ("interval", "box"):
            return np.all((x > lo) & (x < hi), axis=1)
        if self.kind == "l_shape":
            nlo = np.array([b[0] for b in self.notch])
            nhi = np.array([b[1] for b in self.notch])
            outer = np.all((x > lo) & (x < hi), axis=1)
            in_notch = np.all((x >= nlo) & (x <= nhi), axis=1)
            return outer & ~in_notch
        if self.kind == "disc":
            c = np.asarray(self.center, dtype=float)
            return np.sum((x - c) ** 2, axis=1) < self.radius**2
        if self.predicate is not None:
            return np.asarray(self.predicate(x), dtype=bool)
        inside = np.zeros(len(x), dtype=bool)
        for box in self.boxes:
            blo = np.array([b[0] for b in box])
            bhi = np.array([b[1] for b in box])
            inside |= np.all((x > blo) & (x < bhi), axis=1)
        return inside

    def contains_closure(self, x: np.ndarray) -> np.ndarray:
        """Membership in the closure, decided by probing tiny perturbations.

        Exact for the polyhedral shapes and for boundary points of discs: a
        point belongs to the closure iff some point of the open set lies within
        ``delta`` of it in one of the 3^n - 1 diagonal directions (or it is
        itself inside).
        """
        x = np.atleast_2d(x)
        scale = max(1.0, max(abs(v) for b in self.bounds for v in b))
        delta = 1e-9 * scale
        hit = self.contains_open(x)
        for step in itertools.product((-1.0, 0.0, 1.0), repeat=x.shape[1]):
            if not any(step):
                continue
            hit |= self.contains_open(x + delta * np.asarray(step))
        return hit

    def to_dict(self) -> dict:
        if self.predicate is not None:
            raise DomainError("callable predicates are not serializable")
        out = {"kind": self.kind, "bounds": [list(b) for b in self.bounds]}
        if self.notch is not None:
            out["notch"] = [list(b) for b in self.notch]
        if self.center is not None:
            out["center"] = list(self.center)
            out["radius"] = self.radius
        if self.boxes:
            out["boxes"] = [[list(b) for b in box] for box in self.boxes]
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "ShapeSpec":
        def boxify(b):
            return tuple(tuple(float(v) for v in ab) for ab in b) if b is not None else None

        return cls(
            kind=data["kind"],
            bounds=boxify(data.get("bounds", ())) or (),
            notch=boxify(data.get("notch")),
            center=tuple(data["center"]) if data.get("center") is not None else None,
            radius=data.get("radius"),
            boxes=tuple(boxify(b) for b in data["boxes"]) if data.get("boxes") else None,
        )


def interval(lo: float = 0.0, hi: float = 1.0) -> ShapeSpec:
    return ShapeSpec("interval", bounds=((lo, hi),))


def box(*bounds: Sequence[float]) -> ShapeSpec:
    return ShapeSpec("box", bounds=tuple(tuple(b) for b in bounds))


def l_shape() -> ShapeSpec:
    """(0,2)^2 with the closed corner [1,2]x[0,1] removed."""
    return ShapeSpec("l_shape", bounds=((0, 2), (0, 2)), notch=((1, 2), (0, 1)))


def disc(center=(0.0, 0.0), radius: float = 1.0) -> ShapeSpec:
    return ShapeSpec("disc", center=tuple(center), radius=radius)


def union_of_boxes(*boxes) -> ShapeSpec:
    boxes = tuple(tuple(tuple(b) for b in bx) for bx in boxes)
    n = len(boxes[0])
    bounds = tuple(
        (min(bx[k][0] for bx in boxes), max(bx[k][1] for bx in boxes)) for k in range(n)
    )
    return ShapeSpec("predicate_grid", bounds=bounds, boxes=boxes)


@dataclass(frozen=True, eq=False)
class SampledDomain:
    """A rasterized bounded domain; immutable once built.

    Point indices everywhere refer to rows of ``points`` (the closure points).
    """

    shape: ShapeSpec
    spacing: float
    points: np.ndarray
    grid_index: np.ndarray
    interior_mask: np.ndarray
    edges: np.ndarray
    edge_lengths: np.ndarray
    connected: bool
    n_components: int
    euclidean_diameter: float

    @property
    def dimension(self) -> int:
        return self.points.shape[1]

    @property
    def n_points(self) -> int:
        return len(self.points)

    @property
    def interior_indices(self) -> np.ndarray:
        return np.flatnonzero(self.interior_mask)

    @property
    def interior_points(self) -> np.ndarray:
        return self.points[self.interior_mask]

    @property
    def closure_points(self) -> np.ndarray:
        return self.points

    @cached_property
    def lookup(self) -> np.ndarray:
        """Dense grid array mapping grid indices to point indices (-1 if absent)."""
        dims = tuple(int(d) + 1 for d in self.grid_index.max(axis=0))
        table = np.full(dims, -1, dtype=np.int64)
        table[tuple(self.grid_index.T)] = np.arange(self.n_points)
        return table

    @cached_property
    def graph(self) -> csr_matrix:
        n = self.n_points
        i, j = self.edges[:, 0], self.edges[:, 1]
        w = self.edge_lengths
        return csr_matrix(
            (np.concatenate([w, w]), (np.concatenate([i, j]), np.concatenate([j, i]))),
            shape=(n, n),
        )

    @cached_property
    def component_labels(self) -> np.ndarray:
        return connected_components(self.graph, directed=False)[1]

    @cached_property
    def digest(self) -> str:
        """Stable hash of the sampled point set, used to tag family files."""
        h = hashlib.sha256()
        h.update(np.ascontiguousarray(self.points, dtype="<f8").tobytes())
        return h.hexdigest()[:16]

    @cached_property
    def _ratio_scan(self):
        return _scan_geodesic_ratios(self)


def _grid_axes(spec: ShapeSpec, h: float):
    axes = []
    for lo, hi in spec.bounds:
        count = int(math.floor((hi - lo) / h + 1e-9)) + 1
        axes.append(np.round(lo + h * np.arange(count), _ROUND_DECIMALS))
    return axes


def _half_offsets(n: int):
    """Neighbour offsets in {-1,0,1}^n whose first nonzero entry is positive."""
    out = []
    for off in itertools.product((-1, 0, 1), repeat=n):
        nz = [v for v in off if v]
        if nz and nz[0] > 0:
            out.append(off)
    return np.array(out, dtype=np.int64)


def build_grid_domain(spec: ShapeSpec, h: float) -> SampledDomain:
    """Rasterize ``spec`` on a grid of step ``h`` anchored at the lower bounds."""
    if not (h > 0) or not math.isfinite(h):
        raise DomainError("invalid spacing")
    axes = _grid_axes(spec, h)
    mesh = np.meshgrid(*axes, indexing="ij")
    coords = np.stack([m.ravel() for m in mesh], axis=1)
    gidx = np.stack(
        [m.ravel() for m in np.meshgrid(*[np.arange(len(a)) for a in axes], indexing="ij")],
        axis=1,
    )
    closed = spec.contains_closure(coords)
    if not closed.any():
        raise DomainError("resolution too coarse")
    points = coords[closed]
    gidx = gidx[closed]
    interior = spec.contains_open(points)
    if not interior.any():
        raise DomainError("resolution too coarse")

    table = np.full(tuple(len(a) for a in axes), -1, dtype=np.int64)
    table[tuple(gidx.T)] = np.arange(len(points))
    src, dst = [], []
    for off in _half_offsets(spec.dimension):
        g = gidx + off
        ok = np.all((g >= 0) & (g < np.array(table.shape)), axis=1)
        nb = np.full(len(points), -1, dtype=np.int64)
        nb[ok] = table[tuple(g[ok].T)]
        has = np.flatnonzero(nb >= 0)
        mid = 0.5 * (points[has] + points[nb[has]])
        keep = spec.contains_closure(mid)
        src.append(has[keep])
        dst.append(nb[has][keep])
    edges = np.stack([np.concatenate(src), np.concatenate(dst)], axis=1) if src else np.zeros((0, 2), int)
    lengths = np.linalg.norm(points[edges[:, 1]] - points[edges[:, 0]], axis=1)

    n = len(points)
    if n > 1:
        graph = csr_matrix((np.ones(len(edges)), (edges[:, 0], edges[:, 1])), shape=(n, n))
        ncomp = int(connected_components(graph, directed=False)[0])
    else:
        ncomp = 1
    return SampledDomain(
        shape=spec,
        spacing=float(h),
        points=points,
        grid_index=gidx,
        interior_mask=interior,
        edges=edges,
        edge_lengths=lengths,
        connected=ncomp == 1,
        n_components=ncomp,
        euclidean_diameter=_diameter(points),
    )


def _diameter(points: np.ndarray) -> float:
    if len(points) < 2:
        return 0.0
    if points.shape[1] == 1:
        return float(points.max() - points.min())
    if len(points) <= 3000:
        return float(pdist(points).max())
    try:
        hull = points[ConvexHull(points).vertices]
    except Exception:  # degenerate (flat) point sets
        hull = points
    return float(pdist(hull).max())


def geodesic_distance(dom: SampledDomain, i: int, j: int) -> float:
    """Shortest-path length between closure points ``i`` and ``j``."""
    n = dom.n_points
    if not (0 <= i < n and 0 <= j < n):
        raise DomainError(f"point index out of range (have {n} points)")
    if i == j:
        return 0.0
    a, b = min(i, j), max(i, j)  # same source for (i, j) and (j, i): exact symmetry
    d = dijkstra(dom.graph, directed=False, indices=a)[b]
    if not math.isfinite(d):
        raise NoPathError("no connecting path")
    return float(d)


def geodesic_matrix(dom: SampledDomain) -> np.ndarray:
    """All-pairs grid geodesics (quadratic memory; use for small domains)."""
    d = dijkstra(dom.graph, directed=False)
    return np.minimum(d, d.T)


def _scan_geodesic_ratios(dom: SampledDomain):
    n = dom.n_points
    best, arg, longest = -1.0, (0, 1), 0.0
    for start in range(0, n, _APSP_CHUNK):
        rows = np.arange(start, min(start + _APSP_CHUNK, n))
        g = dijkstra(dom.graph, directed=False, indices=rows)
        e = cdist(dom.points[rows], dom.points)
        cols = np.arange(n)
        upper = cols[None, :] > rows[:, None]
        longest = max(longest, float(g[upper].max(initial=0.0)))
        ratio = np.where(upper, g / np.where(upper, e, 1.0), 0.0)
        k = int(np.argmax(ratio))
        r, c = divmod(k, n)
        if ratio[r, c] > best:
            best, arg = float(ratio[r, c]), (int(rows[r]), int(c))
    return best, arg, longest


def c_omega(dom: SampledDomain) -> float:
    """Largest ratio of grid geodesic to Euclidean distance over sampled pairs.

    This is an estimate of the quasiconvexity constant: a lower bound over
    sampled pairs, up to the octile overestimate of the geodesics.  Returns
    ``math.inf`` on disconnected domains.
    """
    if dom.n_points < 2:
        raise DomainError("degenerate domain")
    if not dom.connected:
        return math.inf
    return dom._ratio_scan[0]


def c_omega_witness(dom: SampledDomain) -> tuple[float, tuple[int, int]]:
    """``c_omega`` together with a pair of point indices attaining it."""
    value = c_omega(dom)
    if math.isinf(value):
        return value, (-1, -1)
    return value, dom._ratio_scan[1]


def max_geodesic(dom: SampledDomain) -> float:
    if not dom.connected:
        return math.inf
    return dom._ratio_scan[2]
