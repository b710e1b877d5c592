"""Off-diagonal pair samples and the difference-quotient transform S.

``S[g](x, y) = (g(x) - g(y)) / |x - y|**alpha`` is evaluated on an explicit,
reproducible list of ordered pairs of distinct sample points.  On a shared pair
list the sup of ``|S[g]|`` is the Hölder quotient of ``g``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterable

import numpy as np
from scipy.spatial import cKDTree

from .errors import DomainError, SchauderError

if TYPE_CHECKING:
    from .domain import SampledDomain
    from .function import SampledFunction

# full ordered pair sets are used up to this many points
FULL_PAIR_POINT_LIMIT = 2000
DEFAULT_PAIR_BUDGET = 200_000


@dataclass(frozen=True, eq=False)
class PairGrid:
    """Ordered pairs ``(first[k], second[k])`` of distinct closure-point indices."""

    domain: "SampledDomain"
    first: np.ndarray
    second: np.ndarray
    separations: np.ndarray
    budget: int
    seed: int
    point_set: str = "interior"

    def __len__(self) -> int:
        return len(self.first)

    @property
    def pairs(self) -> np.ndarray:
        return np.stack([self.first, self.second], axis=1)

    @property
    def min_separation(self) -> float:
        return float(self.separations.min())

    def scale(self, alpha: float) -> np.ndarray:
        """``|x - y|**alpha`` per pair."""
        return self.separations**alpha


def _candidate_points(dom: "SampledDomain", point_set: str) -> np.ndarray:
    if point_set == "interior":
        return dom.interior_indices
    if point_set == "closure":
        return np.arange(dom.n_points)
    raise SchauderError(f"unknown point set {point_set!r}")


def _nearest_neighbour_pairs(coords: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """All nearest-neighbour ties, in both orientations (local indices)."""
    tree = cKDTree(coords)
    dist, _ = tree.query(coords, k=2)
    radii = dist[:, 1] * (1 + 1e-9)
    a, b = [], []
    for i, hits in enumerate(tree.query_ball_point(coords, radii)):
        for j in hits:
            if j != i:
                a.append(i)
                b.append(j)
    a, b = np.array(a, dtype=np.int64), np.array(b, dtype=np.int64)
    return np.concatenate([a, b]), np.concatenate([b, a])


def build_pair_grid(
    dom: "SampledDomain",
    budget: int | None = None,
    seed: int = 0,
    point_set: str = "interior",
    anchors: Iterable[int] = (),
) -> PairGrid:
    """Sample ordered off-diagonal pairs of ``dom``.

    If all ordered pairs fit in ``budget`` they are all kept.  Otherwise a
    seeded uniform sample of ``budget`` pairs is drawn and augmented with every
    nearest-neighbour pair and with all pairs through the ``anchors`` points.
    ``budget=None`` means: all pairs when there are at most
    ``FULL_PAIR_POINT_LIMIT`` points, ``DEFAULT_PAIR_BUDGET`` otherwise.
    """
    idx = _candidate_points(dom, point_set)
    n = len(idx)
    if n < 2:
        raise DomainError("degenerate domain")
    total = n * (n - 1)
    if budget is None:
        budget = total if n <= FULL_PAIR_POINT_LIMIT else DEFAULT_PAIR_BUDGET
    if budget <= 0:
        raise SchauderError("pair budget must be positive")

    if total <= budget:
        a, b = np.divmod(np.arange(n * n, dtype=np.int64), n)
        keep = a != b
        a, b = a[keep], b[keep]
    else:
        rng = np.random.default_rng(seed)
        k = rng.choice(total, size=budget, replace=False)
        a, r = np.divmod(k, n - 1)
        b = np.where(r < a, r, r + 1)
        na, nb = _nearest_neighbour_pairs(dom.points[idx])
        a, b = np.concatenate([a, na]), np.concatenate([b, nb])
        local = {int(p): q for q, p in enumerate(idx)}
        for anchor in anchors:
            if anchor not in local:
                raise DomainError(f"anchor {anchor} is not in the {point_set} point set")
            others = np.delete(np.arange(n), local[anchor])
            fixed = np.full(n - 1, local[anchor])
            a = np.concatenate([a, fixed, others])
            b = np.concatenate([b, others, fixed])
        code = np.unique(a * n + b)
        a, b = np.divmod(code, n)
    first, second = idx[a], idx[b]
    sep = np.linalg.norm(dom.points[first] - dom.points[second], axis=1)
    return PairGrid(dom, first, second, sep, int(budget), int(seed), point_set)


@dataclass(frozen=True, eq=False)
class SFunction:
    pair_grid: PairGrid
    values: np.ndarray
    alpha: float

    @property
    def sup(self) -> float:
        return float(np.max(np.abs(self.values)))


def _check_alpha(alpha: float) -> None:
    if not (0 < alpha <= 1):
        raise SchauderError(f"alpha must lie in (0, 1], got {alpha}")


def s_values(values: np.ndarray, alpha: float, pairs: PairGrid) -> np.ndarray:
    """S applied to a value vector, or row-wise to a stack of value vectors."""
    _check_alpha(alpha)
    values = np.asarray(values, dtype=float)
    return (values[..., pairs.first] - values[..., pairs.second]) / pairs.scale(alpha)


def s_transform(g: "SampledFunction", alpha: float, pairs: PairGrid) -> SFunction:
    if g.domain is not pairs.domain:
        raise SchauderError("domain mismatch between function and pair grid")
    return SFunction(pairs, s_values(g.values, alpha, pairs), alpha)


def isometry_defect(g: "SampledFunction", alpha: float, pairs: PairGrid) -> float:
    """``| sup|S[g]| - |g|_alpha |`` on a shared pair grid."""
    from .function import holder_quotient

    return abs(s_transform(g, alpha, pairs).sup - holder_quotient(g, alpha, pairs))
