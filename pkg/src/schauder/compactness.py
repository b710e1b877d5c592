"""Total-boundedness machinery for finite sampled families.

Everything here certifies total boundedness at one user-chosen scale ``eps``
on sampled data.  Nets are built by the greedy farthest-point rule; coverings
come from ball preimages of a net; failures ship a pairwise separated subset.
Margins: the main net/covering constructions work at ``eps/3`` (and ball
radius ``eps/6``); the value-pattern partition works at ``eps/4``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .covering import (
    Covering,
    RefinementTooLarge,
    cell_refinement,
    equioscillation_check,
    oscillation_table,
    preimage_ball_coverings,
    refine_by_intersection,
)
from .domain import SampledDomain, c_omega
from .errors import OrderUnavailable, PreconditionError, SchauderError
from .function import SampledFunction, multi_indices, norms
from .soperator import PairGrid, SFunction, s_values

MAIN_MARGIN = 3  # eps/3 nets, eps/6 balls
KPHI_MARGIN = 4  # eps/4 value patterns

METRICS = ("sup_on_pairs", "sup_on_points", "c0alpha_norm", "cmalpha_norm")
VERDICTS = ("totally_bounded_at_eps", "fails_at_eps", "inconclusive_at_cap")

_EXACT_REFINE_LIMIT = 2_000_000


def default_cap(family_size: int) -> int:
    """Largest net size still accepted as evidence of total boundedness."""
    return max(1, int(math.floor(2.0 * math.sqrt(family_size))))


@dataclass(frozen=True, eq=False)
class FunctionFamily:
    members: tuple
    labels: tuple
    alpha: float = 1.0
    order: int = 0

    def __post_init__(self):
        members = tuple(self.members)
        if not members:
            raise SchauderError("empty family")
        labels = tuple(self.labels) if self.labels else tuple(f"f{k}" for k in range(len(members)))
        if len(labels) != len(members):
            raise SchauderError("one label per member")
        if len(set(labels)) != len(labels):
            raise SchauderError("labels must be unique")
        dom = members[0].domain
        if any(m.domain is not dom for m in members):
            raise SchauderError("family members must share one domain")
        object.__setattr__(self, "members", members)
        object.__setattr__(self, "labels", labels)

    def __len__(self) -> int:
        return len(self.members)

    @property
    def domain(self) -> SampledDomain:
        return self.members[0].domain

    def values(self, eta=None) -> np.ndarray:
        """Stacked values (rows = members), or a stacked derivative."""
        if eta is None:
            return np.stack([m.values for m in self.members])
        return np.stack([m.derivative(eta) for m in self.members])


@dataclass(frozen=True, eq=False)
class EpsNet:
    """A net with its coverage certificate.

    ``assignment[k]`` is the member index of the net element covering member
    ``k`` and ``distances[k]`` the distance between them in ``metric``.
    """

    member_indices: tuple
    eps: float
    metric: str
    assignment: np.ndarray
    distances: np.ndarray

    def __len__(self) -> int:
        return len(self.member_indices)

    def to_dict(self) -> dict:
        return {
            "member_indices": list(self.member_indices),
            "eps": self.eps,
            "metric": self.metric,
            "assignment": self.assignment.tolist(),
            "distances": self.distances.tolist(),
        }


def _sup_rows(rows) -> np.ndarray:
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    if rows.size == 0:
        raise SchauderError("empty family")
    return rows


def _metric_blocks(members, metric: str, pairs: Optional[PairGrid]) -> list[np.ndarray]:
    """Arrays whose per-block sup distances add up to the requested metric."""
    if metric not in METRICS:
        raise SchauderError(f"unknown metric {metric!r}")
    if isinstance(members, FunctionFamily):
        fam = members
        if metric == "sup_on_points":
            return [fam.values()]
        if pairs is None:
            raise SchauderError(f"metric {metric} needs a pair grid")
        if metric == "sup_on_pairs":
            return [s_values(fam.values(), fam.alpha, pairs)]
        if metric == "c0alpha_norm":
            return [fam.values(), s_values(fam.values(), fam.alpha, pairs)]
        m = fam.order
        if any(k.max_order < m for k in fam.members):
            raise OrderUnavailable("cmalpha_norm needs derivatives up to the family order")
        n = fam.domain.dimension
        blocks = [fam.values(eta) for k in range(m + 1) for eta in multi_indices(n, k)]
        blocks += [s_values(fam.values(eta), fam.alpha, pairs) for eta in multi_indices(n, m)]
        return blocks
    seq = list(members) if not isinstance(members, np.ndarray) else None
    if seq is not None and seq and isinstance(seq[0], SFunction):
        if metric != "sup_on_pairs":
            raise SchauderError("S-functions only carry the sup_on_pairs metric")
        return [np.stack([s.values for s in seq])]
    if metric not in ("sup_on_pairs", "sup_on_points"):
        raise SchauderError(f"metric {metric} needs a FunctionFamily")
    return [_sup_rows(members)]


def _distances_from(blocks: list[np.ndarray], i: int) -> np.ndarray:
    total = np.zeros(blocks[0].shape[0])
    for b in blocks:
        total += np.max(np.abs(b - b[i]), axis=1)
    return total


def _gonzalez(blocks: list[np.ndarray], eps: float):
    n = blocks[0].shape[0]
    centers = [0]
    mind = _distances_from(blocks, 0)
    assign = np.zeros(n, dtype=np.int64)
    while True:
        k = int(np.argmax(mind))
        if mind[k] <= eps:
            break
        centers.append(k)
        d = _distances_from(blocks, k)
        better = (d < mind) | ((d == mind) & (k < assign))
        mind[better] = d[better]
        assign[better] = k
    return tuple(centers), assign, mind


def greedy_eps_net(members, eps: float, metric: str = "sup_on_points", pairs: Optional[PairGrid] = None) -> EpsNet:
    """Farthest-point net: start at member 0, add the farthest member until all are within ``eps``.

    ``members`` may be a :class:`FunctionFamily`, a list of :class:`SFunction`
    or a 2D array whose rows are compared in sup distance.  The net is
    ``eps``-separated, so it is at most twice as large as a minimal
    ``eps/2``-net.  Ties go to the lowest index.
    """
    if not (eps > 0):
        raise SchauderError("eps must be positive")
    blocks = _metric_blocks(members, metric, pairs)
    centers, assign, dist = _gonzalez(blocks, eps)
    return EpsNet(centers, float(eps), metric, assign, dist)


def pairwise_distances(members, metric: str = "sup_on_points", pairs: Optional[PairGrid] = None,
                       subset: Optional[Sequence[int]] = None) -> np.ndarray:
    blocks = _metric_blocks(members, metric, pairs)
    idx = list(range(blocks[0].shape[0])) if subset is None else list(subset)
    sub = [b[idx] for b in blocks]
    return np.stack([_distances_from(sub, k) for k in range(len(idx))])


@dataclass(frozen=True)
class Boundedness:
    bounded: bool
    sup: float


def pointwise_boundedness(family) -> Boundedness:
    """Sup of ``|f(x)|`` over members and sample points (finite families are always bounded)."""
    rows = family.values() if isinstance(family, FunctionFamily) else _sup_rows(family)
    if not np.all(np.isfinite(rows)):
        raise SchauderError("non-finite input")
    return Boundedness(True, float(np.max(np.abs(rows))))


def _check_net_precondition(rows: np.ndarray, net: np.ndarray, radius: float) -> None:
    for start in range(0, rows.shape[0], 64):
        chunk = rows[start:start + 64]
        d = np.max(np.abs(chunk[:, None, :] - net[None, :, :]), axis=2).min(axis=1)
        if np.any(d > radius):
            bad = start + int(np.argmax(d > radius))
            raise PreconditionError(
                f"not a valid ε/3-net: member {bad} is {float(d.max())!r} away (> {radius!r})"
            )


def net_covering(family_values, net_values, eps: float, exact_limit: int = _EXACT_REFINE_LIMIT):
    """Like :func:`net_to_covering`, also returning how the covering was built."""
    rows, net = _sup_rows(family_values), _sup_rows(net_values)
    if rows.shape[1] != net.shape[1]:
        raise SchauderError("family and net live on different ground sets")
    _check_net_precondition(rows, net, eps / MAIN_MARGIN)
    radius = eps / (2 * MAIN_MARGIN)
    try:
        cov = refine_by_intersection(preimage_ball_coverings(net, radius), limit=exact_limit)
        how = "intersection"
    except RefinementTooLarge:
        cov = cell_refinement(net, radius)
        how = "cells"
    return cov, how


def net_to_covering(family_values, net_values, eps: float) -> Covering:
    """Equioscillating covering of the ground set from an ``eps/3``-net.

    Builds the preimages of ``eps/6``-balls over each net function's range and
    intersects them.  When the exact intersection blows past its size limit the
    joint range-cell partition is used instead; it refines the exact object, so
    the oscillation guarantee is the same.  Every family member then
    oscillates by less than ``eps`` on every part.
    """
    return net_covering(family_values, net_values, eps)[0]


def _representatives(covering: Covering) -> np.ndarray:
    return np.array([int(p[0]) for p in covering.parts], dtype=np.int64)


def covering_to_net(family_values, covering: Covering, eps: float) -> EpsNet:
    """An ``eps``-net in sup distance from a covering equioscillating at ``eps/3``.

    Members are clustered by ``eps/3``-closeness of their values at one
    representative point per part; one member per cluster forms the net.
    """
    rows = _sup_rows(family_values)
    check = equioscillation_check(rows, covering, eps / MAIN_MARGIN)
    if not check.holds:
        fi, pi, osc = check.worst
        raise PreconditionError(
            f"covering does not equioscillate at eps/3: member {fi} oscillates by {osc!r} on part {pi}"
        )
    pointwise_boundedness(rows)
    restricted = rows[:, _representatives(covering)]
    centers, assign, _ = _gonzalez([restricted], eps / MAIN_MARGIN)
    dist = np.max(np.abs(rows - rows[assign]), axis=1)
    if np.any(dist >= eps):
        raise AssertionError("three-term estimate violated; covering check is inconsistent")
    return EpsNet(centers, float(eps), "sup_on_points", assign, dist)


def kphi_partition(family_values, covering: Covering, eps: float) -> list[np.ndarray]:
    """Classes of members sharing a value pattern at the part representatives.

    Values at the representatives are snapped to the nearest point of an
    ``eps/4``-spaced grid; members with the same snapped pattern form a class.
    Each class has sup-diameter below ``eps`` over the whole ground set.
    """
    rows = _sup_rows(family_values)
    check = equioscillation_check(rows, covering, eps / KPHI_MARGIN)
    if not check.holds:
        fi, pi, osc = check.worst
        raise PreconditionError(
            f"covering does not equioscillate at eps/4: member {fi} oscillates by {osc!r} on part {pi}"
        )
    pointwise_boundedness(rows)
    vals = rows[:, _representatives(covering)]
    step = eps / KPHI_MARGIN
    pattern = np.rint((vals - vals.min()) / step).astype(np.int64)
    _, inverse = np.unique(pattern, axis=0, return_inverse=True)
    inverse = inverse.ravel()
    classes = [np.flatnonzero(inverse == c) for c in range(inverse.max() + 1)]
    classes.sort(key=lambda c: int(c[0]))
    for c in classes:
        block = rows[c]
        if np.max(block.max(axis=0) - block.min(axis=0)) >= eps:
            raise AssertionError("class diameter reached eps; covering check is inconsistent")
    return classes


@dataclass(eq=False)
class Diagnosis:
    """Outcome of a compactness diagnostic at scale ``eps``.

    A ``totally_bounded_at_eps`` verdict carries the covering, its oscillation
    table and the net; ``fails_at_eps`` carries a separated witness subset.
    """

    eps: float
    theorem: str
    verdict: str
    pointwise_bounded: bool
    pointwise_sup: float
    covering_found: bool
    cap: int
    net_size: int
    covering: Optional[Covering] = None
    covering_construction: Optional[str] = None
    net: Optional[EpsNet] = None
    oscillations: Optional[np.ndarray] = None
    worst: Optional[tuple] = None
    separation_witness: Optional[dict] = None
    min_pair_separation: Optional[float] = None
    alpha: Optional[float] = None
    norm_sup: Optional[float] = None
    sub_diagnoses: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        out = {
            "theorem": self.theorem,
            "verdict": self.verdict,
            "eps": self.eps,
            "alpha": self.alpha,
            "cap": self.cap,
            "net_size": self.net_size,
            "pointwise_bounded": self.pointwise_bounded,
            "pointwise_sup": self.pointwise_sup,
            "covering_found": self.covering_found,
            "min_pair_separation": self.min_pair_separation,
        }
        if self.norm_sup is not None:
            out["norm_sup"] = self.norm_sup
        if self.worst is not None:
            fi, pi, osc = self.worst
            out["worst_oscillation"] = {"member": fi, "part": pi, "oscillation": osc}
        cert = {}
        if self.covering is not None:
            cert["covering"] = self.covering.to_dict()
            cert["covering_construction"] = self.covering_construction
            cert["max_oscillation_per_part"] = self.oscillations.max(axis=0).tolist()
            cert["max_oscillation_per_member"] = self.oscillations.max(axis=1).tolist()
        if self.net is not None:
            cert["net"] = self.net.to_dict()
        if self.separation_witness is not None:
            cert["separation_witness"] = self.separation_witness
        if cert:
            out["certificates"] = cert
        if self.sub_diagnoses:
            out["sub_diagnoses"] = {k: d.to_dict() for k, d in self.sub_diagnoses.items()}
        out["notes"] = list(self.notes)
        return out


_SCOPE_NOTE = (
    "verdict concerns total boundedness at scale eps on the sampled data only; "
    "it does not assert compactness of the underlying infinite family"
)


def _diagnose_rows(rows: np.ndarray, eps: float, cap: int, theorem: str, metric: str) -> Diagnosis:
    bound = pointwise_boundedness(rows)
    net = greedy_eps_net(rows, eps / MAIN_MARGIN, metric=metric)
    diag = Diagnosis(
        eps=float(eps), theorem=theorem, verdict="inconclusive_at_cap",
        pointwise_bounded=bound.bounded, pointwise_sup=bound.sup,
        covering_found=False, cap=cap, net_size=len(net), net=net,
        notes=[_SCOPE_NOTE],
    )
    if len(net) <= cap:
        cov, how = net_covering(rows, rows[list(net.member_indices)], eps)
        table = oscillation_table(rows, cov)
        check = equioscillation_check(rows, cov, eps)
        diag.covering, diag.covering_construction = cov, how
        diag.oscillations, diag.worst = table, check.worst
        diag.covering_found = check.holds
        if check.holds and bound.bounded:
            diag.verdict = "totally_bounded_at_eps"
        return diag
    sep_bound = eps / 2
    sep = greedy_eps_net(rows, sep_bound, metric=metric)
    if len(sep) > cap:
        members = list(sep.member_indices)
        dist = pairwise_distances(rows, subset=members)
        diag.verdict = "fails_at_eps"
        diag.separation_witness = {
            "members": members,
            "bound": sep_bound,
            "metric": metric,
            "distances": dist.tolist(),
            "min_distance": float(dist[~np.eye(len(members), dtype=bool)].min()),
        }
    else:
        diag.notes.append(f"greedy net ({len(net)}) exceeds cap {cap} but no separated set above the cap was found")
    return diag


def diagnose_sup(family_values, eps: float, cap: Optional[int] = None) -> Diagnosis:
    """Total-boundedness test in sup distance for raw value lists on a ground set."""
    rows = _sup_rows(family_values)
    cap = default_cap(rows.shape[0]) if cap is None else cap
    return _diagnose_rows(rows, eps, cap, "thm_2_3", "sup_on_points")


def diagnose_c0alpha(family: FunctionFamily, pairs: PairGrid, eps: float, cap: Optional[int] = None) -> Diagnosis:
    """Pointwise boundedness plus an equioscillating covering of the pair set for every S[k]."""
    if not (eps > 0):
        raise SchauderError("eps must be positive")
    if pairs.domain is not family.domain:
        raise SchauderError("domain mismatch between family and pair grid")
    cap = default_cap(len(family)) if cap is None else cap
    pointwise = pointwise_boundedness(family)
    rows = s_values(family.values(), family.alpha, pairs)
    diag = _diagnose_rows(rows, eps, cap, "thm_2_4", "sup_on_pairs")
    diag.pointwise_bounded, diag.pointwise_sup = pointwise.bounded, pointwise.sup
    diag.alpha = family.alpha
    diag.min_pair_separation = pairs.min_separation
    diag.notes.append(
        f"pairs closer than {pairs.min_separation!r} are not sampled; sub-grid behaviour near the diagonal is not tested"
    )
    return diag


def diagnose_cmalpha(
    family: FunctionFamily,
    dom: SampledDomain,
    pairs: PairGrid,
    eps: float,
    cap: Optional[int] = None,
    norm_bound: Optional[float] = None,
) -> Diagnosis:
    """Norm boundedness plus the S-covering test for every top-order derivative.

    Requires a connected domain with finite ``c_omega``.  ``norm_bound``, when
    given, is an explicit cap the C^{m,alpha} norms must respect.
    """
    if family.domain is not dom or pairs.domain is not dom:
        raise SchauderError("domain mismatch")
    if not (eps > 0):
        raise SchauderError("eps must be positive")
    if dom.n_points < 2 or math.isinf(c_omega(dom)):
        raise PreconditionError("hypothesis c[Ω] < ∞ violated")
    m = family.order
    if m < 1:
        raise SchauderError("diagnose_cmalpha needs order m >= 1")
    if any(k.max_order < m for k in family.members):
        raise OrderUnavailable("order unavailable")
    cap = default_cap(len(family)) if cap is None else cap
    norm_sup = max(norms(k, m, family.alpha, pairs).cmalpha_norm for k in family.members)
    bounded = math.isfinite(norm_sup) and (norm_bound is None or norm_sup <= norm_bound)
    subs = {}
    for eta in multi_indices(dom.dimension, m):
        rows = s_values(family.values(eta), family.alpha, pairs)
        sub = _diagnose_rows(rows, eps, cap, "thm_2_4", "sup_on_pairs")
        sub.alpha = family.alpha
        sub.min_pair_separation = pairs.min_separation
        subs[str(eta)] = sub
    verdicts = [d.verdict for d in subs.values()]
    if "fails_at_eps" in verdicts:
        verdict = "fails_at_eps"
    elif all(v == "totally_bounded_at_eps" for v in verdicts) and bounded:
        verdict = "totally_bounded_at_eps"
    elif not bounded:
        verdict = "fails_at_eps"
    else:
        verdict = "inconclusive_at_cap"
    pointwise = pointwise_boundedness(family)
    diag = Diagnosis(
        eps=float(eps), theorem="thm_2_5", verdict=verdict,
        pointwise_bounded=bounded, pointwise_sup=pointwise.sup,
        covering_found=all(d.covering_found for d in subs.values()),
        cap=cap, net_size=max(d.net_size for d in subs.values()),
        min_pair_separation=pairs.min_separation, alpha=family.alpha,
        norm_sup=norm_sup, sub_diagnoses=subs, notes=[_SCOPE_NOTE],
    )
    if not bounded:
        diag.notes.append(f"C^{{m,alpha}} norm sup {norm_sup!r} exceeds the bound {norm_bound!r}")
    diag.notes.append(f"c_omega (estimated) = {c_omega(dom)!r}")
    return diag


def basepoint_cells_check(family: FunctionFamily, pairs: PairGrid, diagnosis: Diagnosis, xbar: int) -> dict:
    """Members sharing a seminorm-net cluster and an eps-cell of values at ``xbar``
    are within ``eps * (2 + D**alpha)`` in the C^{0,alpha} norm (D = domain diameter).

    The sup part of the norm is taken over the pair grid's point set, where the
    pairs through ``xbar`` make the estimate valid.
    """
    if diagnosis.net is None or diagnosis.theorem != "thm_2_4":
        raise SchauderError("needs a thm_2_4 diagnosis with a net")
    eps, alpha = diagnosis.eps, family.alpha
    vals = family.values()
    cell = np.floor(vals[:, xbar] / eps).astype(np.int64)
    cluster = diagnosis.net.assignment
    pts = np.unique(np.concatenate([pairs.first, pairs.second]))
    bound = eps * (2 + family.domain.euclidean_diameter**alpha)
    worst = 0.0
    for key in sorted(set(zip(cluster.tolist(), cell.tolist()))):
        members = np.flatnonzero((cluster == key[0]) & (cell == key[1]))
        for a in range(len(members)):
            for b in range(a + 1, len(members)):
                diff = vals[members[a]] - vals[members[b]]
                d = float(np.max(np.abs(diff[pts]))) + float(np.max(np.abs(s_values(diff, alpha, pairs))))
                worst = max(worst, d)
    return {"max_distance": worst, "bound": bound, "holds": worst <= bound}
