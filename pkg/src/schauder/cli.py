"""Batch front-end.

Exit codes: 0 success (or totally bounded at eps), 1 fails at eps,
2 inconclusive at the net-size cap, 3 input or precondition errors,
4 unexpected failures.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .compactness import FunctionFamily, diagnose_c0alpha, diagnose_cmalpha
from .domain import (
    ShapeSpec,
    SampledDomain,
    box,
    build_grid_domain,
    c_omega_witness,
    disc,
    interval,
    l_shape,
    max_geodesic,
    union_of_boxes,
)
from .errors import SchauderError
from .families import BUILTINS, builtin_family, load_family, parse_builtin
from .function import fd_derivatives, multi_indices, norms
from .soperator import build_pair_grid

MODES = ("norms", "diagnose_c0alpha", "diagnose_cmalpha", "geometry")
EXIT_CODES = {"totally_bounded_at_eps": 0, "fails_at_eps": 1, "inconclusive_at_cap": 2}
EXIT_ERROR, EXIT_CRASH = 3, 4

NAMED_DOMAINS = {
    "interval": lambda: interval(0.0, 1.0),
    "square": lambda: box((0.0, 1.0), (0.0, 1.0)),
    "l_shape": l_shape,
    "disc": disc,
    "two_boxes": lambda: union_of_boxes(((0.0, 1.0), (0.0, 1.0)), ((2.0, 3.0), (0.0, 1.0))),
}


def parse_domain(text: str) -> ShapeSpec:
    """Named shape, ``kind:lo,hi,lo,hi``, inline JSON, or a path to a JSON shape file."""
    text = text.strip()
    if text in NAMED_DOMAINS:
        return NAMED_DOMAINS[text]()
    if text.startswith("{"):
        return ShapeSpec.from_dict(json.loads(text))
    if text.endswith(".json"):
        return ShapeSpec.from_dict(json.loads(Path(text).read_text()))
    kind, _, rest = text.partition(":")
    if kind in ("interval", "box") and rest:
        nums = [float(v) for v in rest.split(",")]
        if len(nums) % 2:
            raise SchauderError("box bounds come in lo,hi pairs")
        return ShapeSpec("interval" if len(nums) == 2 else "box",
                         bounds=tuple(zip(nums[::2], nums[1::2])))
    raise SchauderError(f"cannot parse domain {text!r}")


@dataclass
class RunConfig:
    domain: str
    h: float
    family: str = "constants"
    alpha: float = 1.0
    m: int = 0
    eps: float = 0.1
    pair_budget: Optional[int] = None
    seed: int = 0
    output_path: Optional[str] = None
    mode: str = "geometry"

    def validate(self) -> None:
        if self.mode not in MODES:
            raise SchauderError(f"unknown mode {self.mode!r}")
        if not (self.eps > 0):
            raise SchauderError("eps must be positive")
        if not (0 < self.alpha <= 1):
            raise SchauderError("alpha must lie in (0, 1]")
        if self.m < 0:
            raise SchauderError("m must be nonnegative")
        if self.pair_budget is not None and self.pair_budget <= 0:
            raise SchauderError("pair budget must be positive")


def _family(config: RunConfig, dom: SampledDomain) -> FunctionFamily:
    name = config.family.partition(":")[0]
    if name in BUILTINS:
        name, params = parse_builtin(config.family)
        return builtin_family(name, dom, config.alpha, config.m, **params)
    fam = load_family(config.family, dom, alpha=config.alpha, order=config.m)
    return fam


def _domain_summary(dom: SampledDomain) -> dict:
    return {
        "shape": dom.shape.to_dict(),
        "h": dom.spacing,
        "n_points": dom.n_points,
        "n_interior": int(dom.interior_mask.sum()),
        "connected": dom.connected,
        "euclidean_diameter": dom.euclidean_diameter,
        "digest": dom.digest,
    }


def _finite_or_str(x: float):
    return x if math.isfinite(x) else "inf"


def _geometry(dom: SampledDomain) -> dict:
    value, (i, j) = c_omega_witness(dom)
    out = {
        "c_omega": _finite_or_str(value),
        "c_omega_estimated": True,
        "euclidean_diameter": dom.euclidean_diameter,
        "connected": dom.connected,
        "n_components": dom.n_components,
        "n_edges": int(len(dom.edges)),
        "max_geodesic": _finite_or_str(max_geodesic(dom)),
    }
    if math.isfinite(value):
        out["c_omega_pair"] = {"indices": [i, j], "points": [dom.points[i].tolist(), dom.points[j].tolist()]}
    return out


def _ground(pairs) -> dict:
    return {
        "points": pairs.domain.points.tolist(),
        "pairs": pairs.pairs.tolist(),
        "point_set": pairs.point_set,
    }


def run(config: RunConfig) -> tuple[int, dict]:
    """Execute one run; returns the exit code and the report (also written to ``output_path``)."""
    config.validate()
    dom = build_grid_domain(parse_domain(config.domain), config.h)
    report = {
        "tool": "schauder",
        "version": __version__,
        "mode": config.mode,
        "config": {k: v for k, v in asdict(config).items() if k != "output_path"},
        "domain": _domain_summary(dom),
    }
    code = 0
    if config.mode == "geometry":
        report["geometry"] = _geometry(dom)
    else:
        family = _family(config, dom)
        pairs = build_pair_grid(dom, budget=config.pair_budget, seed=config.seed)
        report["pair_grid"] = {"count": len(pairs), "min_separation": pairs.min_separation,
                               "budget": pairs.budget, "seed": pairs.seed}
        if config.mode == "norms":
            members = [f if f.max_order >= config.m else fd_derivatives(f, config.m) for f in family.members]
            report["norms"] = [
                {"label": label, **norms(f, config.m, config.alpha, pairs).to_dict()}
                for label, f in zip(family.labels, members)
            ]
        elif config.mode == "diagnose_c0alpha":
            diag = diagnose_c0alpha(family, pairs, config.eps)
            report["diagnosis"] = diag.to_dict()
            report["ground"] = _ground(pairs)
            report["member_values"] = {"": family.values().tolist()}
            code = EXIT_CODES[diag.verdict]
        else:
            diag = diagnose_cmalpha(family, dom, pairs, config.eps)
            report["diagnosis"] = diag.to_dict()
            report["ground"] = _ground(pairs)
            report["member_values"] = {
                str(eta): family.values(eta).tolist() for eta in multi_indices(dom.dimension, config.m)
            }
            code = EXIT_CODES[diag.verdict]
        report["labels"] = list(family.labels)
    report["exit_code"] = code
    if config.output_path:
        write_report(config.output_path, report)
    return code, report


def write_report(path, report: dict) -> None:
    Path(path).write_text(json.dumps(report, indent=1, allow_nan=False) + "\n")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_ERROR)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="schauder", description="Schauder-space norms and compactness diagnostics on sampled domains.")
    p.add_argument("--domain", required=True,
                   help=f"one of {sorted(NAMED_DOMAINS)}, 'box:lo,hi,...', inline JSON or a .json shape file")
    p.add_argument("--h", type=float, required=True, help="grid spacing")
    p.add_argument("--family", default="constants",
                   help=f"builtin ({', '.join(sorted(BUILTINS))}) as name[:key=val,...], or a family JSON file")
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--m", type=int, default=0)
    p.add_argument("--eps", type=float, default=0.1)
    p.add_argument("--pair-budget", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mode", choices=MODES, default="geometry")
    p.add_argument("--out", default=None, help="report path (JSON)")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    config = RunConfig(
        domain=args.domain, h=args.h, family=args.family, alpha=args.alpha, m=args.m,
        eps=args.eps, pair_budget=args.pair_budget, seed=args.seed,
        output_path=args.out, mode=args.mode,
    )
    try:
        code, report = run(config)
    except (SchauderError, OSError, json.JSONDecodeError) as exc:
        print(f"schauder: error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except Exception as exc:  # pragma: no cover - last-resort guard for the exit-code contract
        print(f"schauder: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CRASH
    diag = report.get("diagnosis")
    if diag is not None:
        print(f"verdict: {diag['verdict']} (eps={diag['eps']}, net size {diag['net_size']}, cap {diag['cap']})")
    elif "geometry" in report:
        g = report["geometry"]
        print(f"c_omega (estimated): {g['c_omega']}  diameter: {g['euclidean_diameter']}")
    else:
        for row in report["norms"]:
            print(f"{row['label']}: C^{{m,alpha}} norm {row['cmalpha_norm']!r}")
    return code


if __name__ == "__main__":
    sys.exit(main())
