"""Builtin parametric families and the JSON family file format.

A family file looks like::

    {"domain_hash": "...", "alpha": 0.5, "order": 1,
     "members": [{"label": "f0", "values": [...],
                  "derivatives": {"1,0": [...], "0,1": [...]}}]}
"""
from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Callable

import numpy as np

from .compactness import FunctionFamily
from .domain import SampledDomain
from .errors import FamilyFileError, SchauderError
from .function import MultiIndex, SampledFunction, multi_indices

MAX_ANALYTIC_ORDER = 2


def _axis0_member(dom: SampledDomain, profile: list[Callable], m: int) -> SampledFunction:
    """Member depending on the first coordinate only; ``profile[j]`` is its j-th derivative."""
    x = dom.points[:, 0]
    n = dom.dimension
    derivs = {}
    for k in range(1, m + 1):
        for eta in multi_indices(n, k):
            if eta.components[0] == k:
                derivs[eta] = profile[k](x)
            else:
                derivs[eta] = np.zeros(dom.n_points)
    return SampledFunction(dom, profile[0](x), derivs)


def _constants(dom, alpha, m, count=3, step=1.0):
    members = [_axis0_member(dom, [lambda x, c=k * step: np.full_like(x, c)] + [np.zeros_like] * m, m)
               for k in range(int(count))]
    return members, [f"const_{k * step!r}" for k in range(int(count))]


def _linear(dom, alpha, m, count=3, max_slope=1.0):
    slopes = np.linspace(0.0, max_slope, int(count))
    members = []
    for a in slopes:
        profile = [lambda x, a=a: a * x, lambda x, a=a: np.full_like(x, a)] + [np.zeros_like] * m
        members.append(_axis0_member(dom, profile, m))
    return members, [f"linear_{float(a)!r}" for a in slopes]


def _translate_points(dom: SampledDomain, count: int) -> np.ndarray:
    lo, hi = dom.shape.bounds[0]
    return np.round(lo + (np.arange(count) + 0.5) * (hi - lo) / count, 12)


def _holder_translates(dom, alpha, m, count=10, integrate=0):
    """|x - t|**alpha, or (integrate=1) its antiderivative so that D^1 is the translate."""
    ts = _translate_points(dom, int(count))
    integrate = int(integrate)
    if m > integrate:
        raise SchauderError(
            f"holder_translates with integrate={integrate} has no derivatives beyond order {integrate}"
        )
    members = []
    for t in ts:
        base = lambda x, t=t: np.abs(x - t) ** alpha
        if integrate == 0:
            profile = [base]
        else:
            profile = [lambda x, t=t: np.sign(x - t) * np.abs(x - t) ** (alpha + 1) / (alpha + 1), base]
        members.append(_axis0_member(dom, profile, m))
    return members, [f"translate_{float(t)!r}" for t in ts]


def _oscillatory(dom, alpha, m, count=20, p=1.0, integrate=0):
    """sin(k pi x) / k**p, or (integrate=1) -cos(k pi x) / (k pi k**p)."""
    if m - int(integrate) > MAX_ANALYTIC_ORDER:
        raise SchauderError("oscillatory supplies derivatives up to order 2")
    members = []
    for k in range(1, int(count) + 1):
        w, c = k * math.pi, 1.0 / k**p
        chain = [
            lambda x, w=w, c=c: -np.cos(w * x) * c / w,
            lambda x, w=w, c=c: np.sin(w * x) * c,
            lambda x, w=w, c=c: w * np.cos(w * x) * c,
            lambda x, w=w, c=c: -w * w * np.sin(w * x) * c,
        ]
        profile = chain[1 - int(integrate):]
        members.append(_axis0_member(dom, profile, m))
    return members, [f"osc_{k}" for k in range(1, int(count) + 1)]


def _product_2d(dom, alpha, m, count=10, p=3.0):
    """sin(k pi x) cos(k pi y) / k**p on a 2D domain."""
    if dom.dimension != 2:
        raise SchauderError("product_2d needs a 2D domain")
    if m > MAX_ANALYTIC_ORDER:
        raise SchauderError("product_2d supplies derivatives up to order 2")
    x, y = dom.points[:, 0], dom.points[:, 1]
    members = []
    for k in range(1, int(count) + 1):
        w, c = k * math.pi, 1.0 / k**p
        sx, cx, sy, cy = np.sin(w * x), np.cos(w * x), np.sin(w * y), np.cos(w * y)
        table = {
            (1, 0): w * cx * cy * c, (0, 1): -w * sx * sy * c,
            (2, 0): -w * w * sx * cy * c, (1, 1): -w * w * cx * sy * c, (0, 2): -w * w * sx * cy * c,
        }
        derivs = {MultiIndex(e): v for e, v in table.items() if sum(e) <= m}
        members.append(SampledFunction(dom, sx * cy * c, derivs))
    return members, [f"prod_{k}" for k in range(1, int(count) + 1)]


BUILTINS = {
    "constants": _constants,
    "linear": _linear,
    "holder_translates": _holder_translates,
    "oscillatory": _oscillatory,
    "product_2d": _product_2d,
}


def parse_builtin(text: str) -> tuple[str, dict]:
    """``"name:key=value,key=value"`` -> ``(name, params)``."""
    name, _, rest = text.partition(":")
    if name not in BUILTINS:
        raise SchauderError(f"unknown builtin family {name!r}; choose from {sorted(BUILTINS)}")
    params = {}
    for item in filter(None, rest.split(",")):
        key, sep, value = item.partition("=")
        if not sep:
            raise SchauderError(f"bad builtin parameter {item!r} (expected key=value)")
        params[key.strip()] = float(value)
    return name, params


def builtin_family(name: str, dom: SampledDomain, alpha: float, m: int = 0, **params) -> FunctionFamily:
    if name not in BUILTINS:
        raise SchauderError(f"unknown builtin family {name!r}")
    if m < 0:
        raise SchauderError("order must be nonnegative")
    try:
        members, labels = BUILTINS[name](dom, alpha, m, **params)
    except TypeError as exc:
        raise SchauderError(f"bad parameters for {name}: {exc}") from None
    return FunctionFamily(tuple(members), tuple(labels), alpha, m)


def save_family(path, family: FunctionFamily) -> None:
    members = []
    for label, f in zip(family.labels, family.members):
        if not np.all(np.isfinite(f.values)):
            raise SchauderError("non-finite input")
        entry = {"label": label, "values": f.values.tolist()}
        if f.derivatives:
            entry["derivatives"] = {str(k): v.tolist() for k, v in f.derivatives.items()}
        members.append(entry)
    doc = {
        "domain_hash": family.domain.digest,
        "alpha": family.alpha,
        "order": family.order,
        "members": members,
    }
    Path(path).write_text(json.dumps(doc, indent=1) + "\n")


def _line_of(text: str, label: str, key: str, index: int) -> int:
    """Best-effort line number of element ``index`` of array ``key`` in member ``label``."""
    pos = text.find(json.dumps(label))
    pos = text.find(json.dumps(key), max(pos, 0))
    pos = text.find("[", max(pos, 0))
    if pos < 0:
        return 0
    depth, count = 0, 0
    for k in range(pos + 1, len(text)):
        ch = text[k]
        if ch in "[{":
            depth += 1
        elif ch in "]}":
            if depth == 0:
                break
            depth -= 1
        elif ch == "," and depth == 0:
            count += 1
            if count == index:
                pos = k + 1
                break
    while pos < len(text) and text[pos] in " \n\t\r,[":
        pos += 1
    return text.count("\n", 0, pos) + 1


def _numeric_array(raw, text, label, key, expected) -> np.ndarray:
    if not isinstance(raw, list):
        raise FamilyFileError(f"line {_line_of(text, label, key, 0)}: {label}/{key} is not an array")
    for k, v in enumerate(raw):
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            line = _line_of(text, label, key, k)
            raise FamilyFileError(f"line {line}: malformed number {v!r} in {label}/{key}[{k}]")
    if len(raw) != expected:
        raise FamilyFileError(
            f"point-count mismatch in {label}/{key}: expected {expected} values, got {len(raw)}"
        )
    return np.asarray(raw, dtype=float)


def load_family(path, dom: SampledDomain, alpha: float | None = None, order: int | None = None) -> FunctionFamily:
    """Read a family file sampled on ``dom``."""
    text = Path(path).read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FamilyFileError(f"line {exc.lineno}: {exc.msg}") from None
    if not isinstance(doc, dict) or not isinstance(doc.get("members"), list) or not doc["members"]:
        raise FamilyFileError("family file needs a nonempty 'members' list")
    digest = doc.get("domain_hash")
    if digest and digest != dom.digest:
        raise FamilyFileError(f"domain hash mismatch: file {digest}, domain {dom.digest}")
    members, labels = [], []
    for k, entry in enumerate(doc["members"]):
        label = str(entry.get("label", f"f{k}"))
        values = _numeric_array(entry.get("values"), text, label, "values", dom.n_points)
        derivs = {
            MultiIndex.parse(key): _numeric_array(arr, text, label, key, dom.n_points)
            for key, arr in (entry.get("derivatives") or {}).items()
        }
        members.append(SampledFunction(dom, values, derivs))
        labels.append(label)
    return FunctionFamily(
        tuple(members), tuple(labels),
        float(doc.get("alpha", 1.0) if alpha is None else alpha),
        int(doc.get("order", 0) if order is None else order),
    )
