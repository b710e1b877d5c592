"""Sampled functions on a domain closure and their Schauder norms."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional

import numpy as np

from .domain import SampledDomain, c_omega
from .errors import DomainError, OrderUnavailable, SchauderError
from .soperator import PairGrid, _check_alpha, build_pair_grid

MAX_FD_ORDER = 2


@dataclass(frozen=True, order=True)
class MultiIndex:
    components: tuple

    def __post_init__(self):
        comps = tuple(int(c) for c in self.components)
        if any(c < 0 for c in comps):
            raise SchauderError("multi-index components must be nonnegative")
        object.__setattr__(self, "components", comps)

    @property
    def order(self) -> int:
        return sum(self.components)

    @property
    def dimension(self) -> int:
        return len(self.components)

    @classmethod
    def parse(cls, text: str) -> "MultiIndex":
        return cls(tuple(int(t) for t in text.split(",")))

    def __str__(self) -> str:
        return ",".join(str(c) for c in self.components)


def multi_indices(n: int, order: int) -> list[MultiIndex]:
    """Multi-indices in ``n`` variables with ``|eta| == order``, (order,0,..) first."""
    out = [
        MultiIndex(c)
        for c in itertools.product(range(order + 1), repeat=n)
        if sum(c) == order
    ]
    return sorted(out, reverse=True)


def _as_index(eta, n: int) -> MultiIndex:
    if isinstance(eta, MultiIndex):
        mi = eta
    elif isinstance(eta, str):
        mi = MultiIndex.parse(eta)
    else:
        mi = MultiIndex(tuple(eta))
    if mi.dimension != n:
        raise SchauderError(f"multi-index {mi} does not match dimension {n}")
    return mi


@dataclass(frozen=True, eq=False)
class SampledFunction:
    """Values on the closure points of ``domain``, plus optional derivatives.

    ``derivatives`` maps every multi-index with ``1 <= |eta| <= max_order`` to
    a value array; partial derivative sets are rejected.
    """

    domain: SampledDomain
    values: np.ndarray
    derivatives: Mapping[MultiIndex, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        n = self.domain.dimension
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (self.domain.n_points,):
            raise SchauderError(
                f"expected {self.domain.n_points} values, got {vals.shape[0] if vals.ndim else 0}"
            )
        derivs = {}
        for eta, arr in self.derivatives.items():
            arr = np.asarray(arr, dtype=float)
            if arr.shape != vals.shape:
                raise SchauderError(f"derivative {eta} has the wrong length")
            derivs[_as_index(eta, n)] = arr
        top = max((eta.order for eta in derivs), default=0)
        expected = {eta for k in range(1, top + 1) for eta in multi_indices(n, k)}
        if set(derivs) != expected:
            raise SchauderError("derivatives must be supplied for every |eta| up to the top order")
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "derivatives", dict(sorted(derivs.items(), reverse=True)))

    @property
    def max_order(self) -> int:
        return max((eta.order for eta in self.derivatives), default=0)

    def derivative(self, eta) -> np.ndarray:
        mi = _as_index(eta, self.domain.dimension)
        if mi.order == 0:
            return self.values
        try:
            return self.derivatives[mi]
        except KeyError:
            raise OrderUnavailable("order unavailable") from None

    def __mul__(self, c: float) -> "SampledFunction":
        return SampledFunction(
            self.domain, c * self.values, {k: c * v for k, v in self.derivatives.items()}
        )

    __rmul__ = __mul__

    def __add__(self, other: "SampledFunction") -> "SampledFunction":
        if other.domain is not self.domain:
            raise SchauderError("domain mismatch")
        common = min(self.max_order, other.max_order)
        return SampledFunction(
            self.domain,
            self.values + other.values,
            {k: v + other.derivatives[k] for k, v in self.derivatives.items() if k.order <= common},
        )

    def __sub__(self, other: "SampledFunction") -> "SampledFunction":
        return self + (-1.0) * other


def sample(
    dom: SampledDomain,
    func: Callable[..., np.ndarray],
    derivatives: Optional[Mapping] = None,
) -> SampledFunction:
    """Evaluate ``func(x1, ..., xn)`` (and analytic derivatives) on ``dom``."""
    cols = [dom.points[:, k] for k in range(dom.dimension)]

    def ev(fn):
        return np.broadcast_to(np.asarray(fn(*cols), dtype=float), (dom.n_points,)).copy()

    derivs = {eta: ev(fn) for eta, fn in (derivatives or {}).items()}
    return SampledFunction(dom, ev(func), derivs)


def _quotients(values: np.ndarray, alpha: float, pairs: PairGrid) -> np.ndarray:
    return np.abs(values[pairs.first] - values[pairs.second]) / pairs.scale(alpha)


def holder_quotient(f: SampledFunction, alpha: float, pairs: PairGrid) -> float:
    """max over the pair grid of ``|f(x) - f(y)| / |x - y|**alpha``."""
    _check_alpha(alpha)
    if len(pairs) == 0:
        raise SchauderError("no pairs")
    if pairs.domain is not f.domain:
        raise SchauderError("domain mismatch between function and pair grid")
    return float(np.max(_quotients(f.values, alpha, pairs)))


def _values_quotient(values: np.ndarray, alpha: float, pairs: PairGrid) -> float:
    return float(np.max(_quotients(values, alpha, pairs)))


@dataclass(frozen=True)
class NormReport:
    sup_norm: float
    cm_norm: float
    holder_quotients: dict
    cmalpha_norm: float
    alpha: float
    order: int

    def to_dict(self) -> dict:
        return {
            "sup_norm": self.sup_norm,
            "cm_norm": self.cm_norm,
            "holder_quotients": {str(k): v for k, v in self.holder_quotients.items()},
            "cmalpha_norm": self.cmalpha_norm,
            "alpha": self.alpha,
            "order": self.order,
        }


def norms(f: SampledFunction, m: int, alpha: float, pairs: PairGrid) -> NormReport:
    """Sup norm, C^m norm, top-order Hölder quotients and the C^{m,alpha} norm."""
    _check_alpha(alpha)
    if m < 0:
        raise SchauderError("order must be nonnegative")
    if f.max_order < m:
        raise OrderUnavailable("order unavailable")
    n = f.domain.dimension
    sups = [float(np.max(np.abs(f.derivative(eta)))) for k in range(m + 1) for eta in multi_indices(n, k)]
    cm = math.fsum(sups)
    if pairs.domain is not f.domain:
        raise SchauderError("domain mismatch between function and pair grid")
    quot = {eta: _values_quotient(f.derivative(eta), alpha, pairs) for eta in multi_indices(n, m)}
    return NormReport(
        sup_norm=sups[0],
        cm_norm=cm,
        holder_quotients=quot,
        cmalpha_norm=math.fsum([cm, *quot.values()]),
        alpha=alpha,
        order=m,
    )


def basepoint_norm(f: SampledFunction, xbar: int, alpha: float, pairs: PairGrid) -> float:
    """``|f(xbar)| + |f|_alpha``, a norm equivalent to the C^{0,alpha} norm."""
    if not (0 <= xbar < f.domain.n_points):
        raise DomainError(f"base point {xbar} out of range")
    return abs(float(f.values[xbar])) + holder_quotient(f, alpha, pairs)


def _axis_derivative(dom: SampledDomain, values: np.ndarray, axis: int) -> np.ndarray:
    """Second-order finite differences along one grid axis."""
    table, gidx, h = dom.lookup, dom.grid_index, dom.spacing

    def neighbour(k):
        g = gidx.copy()
        g[:, axis] += k
        ok = (g[:, axis] >= 0) & (g[:, axis] < table.shape[axis])
        out = np.full(dom.n_points, -1, dtype=np.int64)
        out[ok] = table[tuple(g[ok].T)]
        return out

    p1, m1, p2, m2 = neighbour(1), neighbour(-1), neighbour(2), neighbour(-2)
    d = np.full(dom.n_points, np.nan)
    central = (p1 >= 0) & (m1 >= 0)
    d[central] = (values[p1[central]] - values[m1[central]]) / (2 * h)
    fwd = ~central & (p1 >= 0) & (p2 >= 0)
    d[fwd] = (-3 * values[fwd] + 4 * values[p1[fwd]] - values[p2[fwd]]) / (2 * h)
    bwd = ~central & ~fwd & (m1 >= 0) & (m2 >= 0)
    d[bwd] = (3 * values[bwd] - 4 * values[m1[bwd]] + values[m2[bwd]]) / (2 * h)
    # two-point lines: first-order is all there is
    rest = np.isnan(d)
    one_f = rest & (p1 >= 0)
    d[one_f] = (values[p1[one_f]] - values[one_f]) / h
    one_b = rest & ~one_f & (m1 >= 0)
    d[one_b] = (values[one_b] - values[m1[one_b]]) / h
    if np.isnan(d).any():
        raise DomainError(f"isolated grid points along axis {axis}; cannot difference")
    return d


def fd_derivatives(f: SampledFunction, order: int) -> SampledFunction:
    """Fill in missing derivatives up to ``order`` by finite differences.

    Supplied derivatives are kept.  Each missing ``D^eta f`` is obtained by
    differencing its lower-order parent along the first axis with a positive
    component, so the result is exact on polynomials of degree <= 2.
    """
    if order < 1:
        raise SchauderError("order must be at least 1")
    if order > MAX_FD_ORDER:
        raise OrderUnavailable("unsupported order")
    dom, n = f.domain, f.domain.dimension
    known = {MultiIndex((0,) * n): f.values, **f.derivatives}
    for k in range(1, order + 1):
        for eta in multi_indices(n, k):
            if eta in known:
                continue
            axis = next(a for a, c in enumerate(eta.components) if c > 0)
            parent = list(eta.components)
            parent[axis] -= 1
            known[eta] = _axis_derivative(dom, known[MultiIndex(tuple(parent))], axis)
    top = max(order, f.max_order)
    derivs = {eta: v for eta, v in known.items() if 1 <= eta.order <= top}
    return SampledFunction(dom, f.values, derivs)


@dataclass(frozen=True)
class GradientCheck:
    lhs: float
    rhs: float
    holds: bool


def gradient_seminorm_check(
    f: SampledFunction, dom: SampledDomain, pairs: Optional[PairGrid] = None
) -> GradientCheck:
    """Compare ``|f|_1`` with ``c[Omega] * sum_i sup|d f / d x_i|``.

    ``pairs`` defaults to all ordered pairs of closure points.
    """
    if f.domain is not dom:
        raise SchauderError("domain mismatch")
    if f.max_order < 1:
        raise OrderUnavailable("order unavailable")
    c = c_omega(dom)
    if math.isinf(c):
        raise DomainError("c[Ω] infinite")
    if pairs is None:
        pairs = build_pair_grid(dom, budget=dom.n_points * (dom.n_points - 1), point_set="closure")
    lhs = holder_quotient(f, 1.0, pairs)
    grads = [float(np.max(np.abs(f.derivative(eta)))) for eta in multi_indices(dom.dimension, 1)]
    rhs = c * math.fsum(grads)
    return GradientCheck(lhs, rhs, lhs <= rhs + 1e-6 * (1 + rhs))
