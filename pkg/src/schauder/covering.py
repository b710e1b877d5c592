"""Finite coverings of a sampled ground set and oscillation bookkeeping.

On a finite sample every subset is open in the induced topology, so a part of
a covering is just a nonempty array of ground-set indices.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import PreconditionError, SchauderError

# refine_by_intersection gives up beyond this many stored indices
DEFAULT_REFINE_LIMIT = 5_000_000


class RefinementTooLarge(SchauderError):
    """The exact intersection refinement exceeded its size limit."""


@dataclass(frozen=True, eq=False)
class Covering:
    ground_set_size: int
    parts: tuple
    labels: Optional[tuple] = None

    def __post_init__(self):
        parts = tuple(np.unique(np.asarray(p, dtype=np.int64)) for p in self.parts)
        if not parts:
            raise SchauderError("a covering needs at least one part")
        seen = np.zeros(self.ground_set_size, dtype=bool)
        for p in parts:
            if len(p) == 0:
                raise SchauderError("covering parts must be nonempty")
            if p[0] < 0 or p[-1] >= self.ground_set_size:
                raise SchauderError("part index outside the ground set")
            seen[p] = True
        if not seen.all():
            missing = int(np.flatnonzero(~seen)[0])
            raise SchauderError(f"parts do not cover the ground set (point {missing} missing)")
        if self.labels is not None and len(self.labels) != len(parts):
            raise SchauderError("one label per part")
        object.__setattr__(self, "parts", parts)

    def __len__(self) -> int:
        return len(self.parts)

    def to_dict(self) -> dict:
        out = {"ground_set_size": self.ground_set_size, "parts": [p.tolist() for p in self.parts]}
        if self.labels is not None:
            out["labels"] = list(self.labels)
        return out


@dataclass(frozen=True)
class RealBallNet:
    """Open balls ``(c - radius, c + radius)`` on the real line."""

    centers: tuple
    radius: float

    def __post_init__(self):
        if not (self.radius > 0):
            raise SchauderError("radius must be positive")

    @classmethod
    def spanning(cls, lo: float, hi: float, radius: float) -> "RealBallNet":
        """Centers ``lo + k*radius`` reaching past ``hi``: every value in [lo, hi] is covered."""
        if not (radius > 0):
            raise SchauderError("radius must be positive")
        count = int(math.floor((hi - lo) / radius)) + 2
        return cls(tuple(lo + k * radius for k in range(count)), radius)


def oscillation(f_values, part) -> float:
    """Diameter of ``f(part)``: max minus min."""
    part = np.asarray(part, dtype=np.int64)
    if part.size == 0:
        raise SchauderError("empty part")
    v = np.asarray(f_values, dtype=float)[part]
    return float(v.max() - v.min())


def _stack(family_values) -> np.ndarray:
    rows = np.atleast_2d(np.asarray(family_values, dtype=float))
    if rows.size == 0:
        raise SchauderError("empty family")
    return rows


def preimage_ball_coverings(family_values, radius: float) -> list[Covering]:
    """For each function, the nonempty preimages of a ball net over its range."""
    rows = _stack(family_values)
    out = []
    for i, f in enumerate(rows):
        net = RealBallNet.spanning(float(f.min()), float(f.max()), radius)
        parts, labels = [], []
        for y in net.centers:
            part = np.flatnonzero(np.abs(f - y) < radius)
            if part.size:
                parts.append(part)
                labels.append(f"f{i}<-B({y!r},{radius!r})")
        out.append(Covering(len(f), tuple(parts), tuple(labels)))
    return out


def refine_by_intersection(
    coverings: Sequence[Covering], minimal: bool = False, limit: int = DEFAULT_REFINE_LIMIT
) -> Covering:
    """All distinct nonempty intersections taking one part from each covering.

    Every output part lies inside some part of every input covering.  With
    ``minimal`` set, parts contained in another part are dropped.  Raises
    :class:`RefinementTooLarge` when the total stored size would exceed
    ``limit`` indices.
    """
    if not coverings:
        raise SchauderError("no coverings to refine")
    size = coverings[0].ground_set_size
    if any(c.ground_set_size != size for c in coverings):
        raise SchauderError("mismatched ground sets")
    current = list(coverings[0].parts)
    for cov in coverings[1:]:
        member = np.zeros((len(cov.parts), size), dtype=bool)
        for q, part in enumerate(cov.parts):
            member[q, part] = True
        found: dict[bytes, np.ndarray] = {}
        stored = 0
        for p in current:
            sub = member[:, p]
            for q in np.flatnonzero(sub.any(axis=1)):
                piece = p[sub[q]]
                key = piece.tobytes()
                if key not in found:
                    found[key] = piece
                    stored += piece.size
                    if stored > limit:
                        raise RefinementTooLarge(f"refinement exceeds {limit} stored indices")
        current = list(found.values())
    if len(coverings) == 1:
        current = list({p.tobytes(): p for p in current}.values())
    if minimal:
        current = _drop_contained(current, size)
    current.sort(key=lambda p: (int(p[0]), p.size, p.tobytes()))
    return Covering(size, tuple(current))


def _drop_contained(parts: list, size: int) -> list:
    sets = [frozenset(p.tolist()) for p in parts]
    order = sorted(range(len(parts)), key=lambda k: -len(sets[k]))
    kept: list[int] = []
    for k in order:
        if not any(sets[k] <= sets[j] for j in kept):
            kept.append(k)
    return [parts[k] for k in sorted(kept)]


def cell_refinement(net_values, radius: float) -> Covering:
    """Partition of the ground set by joint half-open range cells.

    Point ``x`` goes to the cell indexed by ``floor((f_i(x) - min f_i) / radius)``
    for every ``i``.  Each cell lies inside one ball preimage per function, so
    this partition refines :func:`refine_by_intersection` of
    :func:`preimage_ball_coverings` at the same radius, at O(r * |W|) cost.
    """
    rows = _stack(net_values)
    codes = np.floor((rows - rows.min(axis=1, keepdims=True)) / radius).astype(np.int64)
    _, inverse = np.unique(codes.T, axis=0, return_inverse=True)
    inverse = inverse.ravel()
    order = np.argsort(inverse, kind="stable")
    bounds = np.flatnonzero(np.diff(inverse[order])) + 1
    parts = np.split(order, bounds)
    parts.sort(key=lambda p: int(p[0]))
    return Covering(rows.shape[1], tuple(parts))


def oscillation_table(family_values, covering: Covering) -> np.ndarray:
    """Oscillation of every function (rows) on every part (columns)."""
    rows = _stack(family_values)
    cat = np.concatenate(covering.parts)
    starts = np.cumsum([0] + [p.size for p in covering.parts[:-1]])
    vals = rows[:, cat]
    return np.maximum.reduceat(vals, starts, axis=1) - np.minimum.reduceat(vals, starts, axis=1)


@dataclass(frozen=True)
class EquioscillationResult:
    holds: bool
    worst: tuple  # (function index, part index, oscillation)


def equioscillation_check(family_values, covering: Covering, eps: float) -> EquioscillationResult:
    """Does every function oscillate by less than ``eps`` on every part?"""
    rows = _stack(family_values)
    if rows.shape[1] != covering.ground_set_size:
        raise PreconditionError("covering and family live on different ground sets")
    table = oscillation_table(rows, covering)
    k = int(np.argmax(table))
    fi, pi = divmod(k, table.shape[1])
    worst = float(table[fi, pi])
    return EquioscillationResult(worst < eps, (fi, pi, worst))
