"""Command-line front end.

Exit codes: 0 success, 1 error, 2 refinement limit (partial output written),
3 event lost during bracketing, 64 usage error, 65 unknown input schema.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import serialize
from ._jit import configure_threads
from .continuation import (
    ContinuationReport,
    Thresholds,
    bracket_bifurcation,
    classify_transition,
    dual_gap,
    sweep,
)
from .errors import EmptySet, EventLost, RefinementLimit, SetDynError
from .geometry import BoxCover, WorkingDomain
from .graph import as_mask, build_graph, dual_set, nodes_to_cover
from .minimal import MinimalSetApproximation, contract_to_fixed_cover, refine_minimal_sets
from .models import PiecewiseAffineMap, check_contraction_certificate, make_model
from .plot import render
from .serialize import UnknownSchema

log = logging.getLogger("setdyn")

EXIT_OK, EXIT_ERROR, EXIT_LIMIT, EXIT_LOST = 0, 1, 2, 3
EXIT_USAGE, EXIT_SCHEMA = 64, 65


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    """Everything a run depends on; written into every output file."""

    command: str = ""
    model: str | None = None
    model_file: str | None = None
    params: dict = field(default_factory=dict)
    domain_lo: list = field(default_factory=lambda: [-4.0])
    domain_hi: list = field(default_factory=lambda: [4.0])
    depth_max: int = 12
    depth_start: int | None = None
    tol: float | None = None
    side: str = "forward"
    thresholds: dict = field(default_factory=lambda: asdict(Thresholds()))
    param: str | None = None
    range_lo: float | None = None
    range_hi: float | None = None
    step: float | None = None
    num: int | None = None
    kind: str | None = None
    with_dual: bool = False
    out: str | None = None
    csv: str | None = None

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d) -> RunConfig:
        return cls(**d)

    def to_json(self) -> str:
        return serialize.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text) -> RunConfig:
        return cls.from_dict(json.loads(text))

    @property
    def domain(self) -> WorkingDomain:
        return WorkingDomain(tuple(self.domain_lo), tuple(self.domain_hi))

    def build_model(self):
        if self.model_file:
            return PiecewiseAffineMap.from_json(self.model_file)
        if not self.model:
            raise UsageError("--model (or --model-file) is required")
        return make_model(self.model, **self.params)


# ------------------------------------------------------------------ parsing


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _pair(text: str) -> tuple[float, float]:
    try:
        a, b = text.split(":")
        return float(a), float(b)
    except ValueError:
        raise UsageError(f"expected lo:hi, got {text!r}") from None


def _common(p):
    p.add_argument("--config", help="JSON file with the same keys as the flags")
    p.add_argument("--model", choices=["saturating", "merging", "contraction"])
    p.add_argument("--model-file", help="piecewise affine map in JSON")
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="model parameter (repeatable)")
    p.add_argument("--domain", action="append", metavar="LO:HI", help="working domain, one flag per axis")
    p.add_argument("--depth-max", type=int)
    p.add_argument("--depth-start", type=int)
    p.add_argument("--tol", type=float)
    p.add_argument("--side", choices=["forward", "dual"])
    for name in asdict(Thresholds()):
        p.add_argument(f"--{name.replace('_', '-')}", type=float, help=f"{name} threshold in box widths")
    p.add_argument("--out", help="output path")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="setdyn", description="Minimal sets and bifurcations of set-valued maps.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    for name, helptext in (
        ("minimal", "approximate minimal sets and write their covers"),
        ("continuation", "sweep a parameter and classify transitions"),
        ("bracket", "bisect a parameter interval around a transition"),
        ("gap", "distance between each minimal set and its dual set"),
        ("dual", "write the dual set of each minimal set"),
    ):
        p = sub.add_parser(name, help=helptext)
        _common(p)
        if name in ("continuation", "bracket"):
            p.add_argument("--param", help="parameter to vary")
            p.add_argument("--range", metavar="LO:HI")
        if name == "continuation":
            p.add_argument("--step", type=float)
            p.add_argument("--num", type=int)
            p.add_argument("--with-dual", action="store_true", default=None)
            p.add_argument("--csv", help="CSV output path (default: next to --out)")
        if name == "bracket":
            p.add_argument("--kind", choices=["explosion", "appearance", "disappearance", "merge_candidate"])
    p = sub.add_parser("plot", help="render a covers or report file as SVG")
    p.add_argument("input")
    p.add_argument("--out")
    p.add_argument("-v", "--verbose", action="store_true")
    return parser


def _glue_negative(argv):
    """Allow ``--domain -1:1`` by gluing range values to their flag."""
    out, i = [], 0
    while i < len(argv):
        tok = argv[i]
        if tok in ("--domain", "--range") and i + 1 < len(argv):
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
        else:
            out.append(tok)
            i += 1
    return out


def _parse_set(items) -> dict:
    params = {}
    for item in items or []:
        if "=" not in item:
            raise UsageError(f"--set expects KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        try:
            params[k.strip()] = float(v)
        except ValueError:
            raise UsageError(f"parameter {k!r} needs a number, got {v!r}") from None
    return params


def resolve_config(args) -> RunConfig:
    """Merge the config file (if any) under the command-line flags."""
    base = {}
    if getattr(args, "config", None):
        base = json.loads(Path(args.config).read_text())
    cfg = RunConfig(command=args.command)
    known = set(RunConfig.__dataclass_fields__)
    for k, v in base.items():
        if k in known:
            setattr(cfg, k, v)
        elif k == "set":
            cfg.params.update(_parse_set(v))
        elif k == "domain":
            _apply_domain(cfg, v)
        elif k == "range":
            cfg.range_lo, cfg.range_hi = _pair(v)
        elif k in asdict(Thresholds()):
            cfg.thresholds = {**cfg.thresholds, k: float(v)}
        else:
            raise UsageError(f"unknown config key {k!r}")
    cfg.params = {k: float(v) for k, v in cfg.params.items()}
    cfg.params.update(_parse_set(getattr(args, "set", None)))
    if getattr(args, "domain", None):
        _apply_domain(cfg, args.domain)
    if getattr(args, "range", None):
        cfg.range_lo, cfg.range_hi = _pair(args.range)
    for name in ("model", "model_file", "depth_max", "depth_start", "tol", "side", "param",
                 "step", "num", "kind", "with_dual", "out", "csv"):
        v = getattr(args, name, None)
        if v is not None:
            setattr(cfg, name, v)
    for name in asdict(Thresholds()):
        v = getattr(args, name, None)
        if v is not None:
            cfg.thresholds = {**cfg.thresholds, name: float(v)}
    return cfg


def _apply_domain(cfg, items):
    if isinstance(items, str):
        items = [items]
    pairs = [_pair(x) for x in items]
    if any(not a < b for a, b in pairs):
        raise UsageError("domain needs lo < hi on every axis")
    cfg.domain_lo = [a for a, _ in pairs]
    cfg.domain_hi = [b for _, b in pairs]


# ----------------------------------------------------------------- commands


def _write(path, text):
    Path(path).write_text(text)
    log.info("wrote %s", path)


def cmd_minimal(cfg: RunConfig) -> int:
    svm = cfg.build_model()
    dom = cfg.domain
    out = cfg.out or "covers.json"
    extra = {}
    if cfg.side == "forward" and check_contraction_certificate(svm).certified:
        fc = contract_to_fixed_cover(svm, dom, cfg.depth_max)
        sets = [fc.approximation]
        extra = {"method": "contraction", "iterations": fc.iterations,
                 "measured_factor": fc.measured_factor, "certified_factor": fc.certified_factor}
    else:
        try:
            sets = refine_minimal_sets(svm, dom, cfg.depth_max, cfg.tol, cfg.side, cfg.depth_start)
            extra = {"method": "subdivision"}
        except RefinementLimit as exc:
            _write(out, serialize.dumps(serialize.covers_to_dict(
                exc.partial, cfg.to_dict(), {"method": "subdivision", "partial": True})))
            print(f"refinement limit: {exc}", file=sys.stderr)
            return EXIT_LIMIT
    _write(out, serialize.dumps(serialize.covers_to_dict(sets, cfg.to_dict(), extra)))
    for a in sets:
        lo, hi = a.cover.hull()
        print(f"{a.side} depth={a.depth} boxes={len(a.cover)} hull={lo.tolist()}..{hi.tolist()}")
    return EXIT_OK


def _grid(cfg):
    if cfg.param is None or cfg.range_lo is None:
        raise UsageError("--param and --range are required")
    lo, hi = cfg.range_lo, cfg.range_hi
    if not lo < hi:
        raise UsageError("empty parameter range")
    if cfg.step is not None:
        if cfg.step <= 0:
            raise UsageError("--step must be positive")
        n = int(round((hi - lo) / cfg.step))
        return [float(v) for v in np.round(lo + cfg.step * np.arange(n + 1), 12)]
    return [float(v) for v in np.linspace(lo, hi, cfg.num or 31)]


def _thresholds(cfg):
    return Thresholds.from_dict(cfg.thresholds)


def cmd_continuation(cfg: RunConfig) -> int:
    svm = cfg.build_model()
    grid = _grid(cfg)
    rep = sweep(svm, cfg.param, grid, cfg.domain, cfg.depth_max, cfg.side, _thresholds(cfg))
    if cfg.with_dual:
        other = "dual" if cfg.side == "forward" else "forward"
        rep.dual_samples = sweep(svm, cfg.param, grid, cfg.domain, cfg.depth_max, other, _thresholds(cfg)).samples
    out = cfg.out or "report.json"
    _write(out, serialize.dumps(serialize.report_to_dict(rep, cfg.to_dict())))
    _write(cfg.csv or str(Path(out).with_suffix(".csv")), serialize.report_csv(rep))
    for e in rep.transitions():
        print(f"{e.kind} {e.param_lo!r} {e.param_hi!r}")
    return EXIT_OK


def cmd_bracket(cfg: RunConfig) -> int:
    svm = cfg.build_model()
    if cfg.param is None or cfg.range_lo is None or cfg.kind is None:
        raise UsageError("--param, --range and --kind are required")
    if not cfg.range_lo < cfg.range_hi:
        raise UsageError("empty parameter range")
    tol = 1e-3 if cfg.tol is None else cfg.tol
    start = 10 if cfg.depth_start is None else cfg.depth_start
    try:
        br = bracket_bifurcation(svm, cfg.param, cfg.range_lo, cfg.range_hi, cfg.kind, cfg.domain, tol,
                                 start_depth=start, max_depth=max(cfg.depth_max, start),
                                 side=cfg.side, thresholds=_thresholds(cfg))
    except EventLost as exc:
        print(f"event lost: {exc}", file=sys.stderr)
        for lo, hi in exc.brackets:
            print(f"{lo!r} {hi!r}")
        return EXIT_LOST
    if cfg.out:
        rep = ContinuationReport(
            svm.name, dict(svm.params), cfg.param, cfg.domain, br.depth, cfg.side, _thresholds(cfg),
            [br.sample_lo, br.sample_hi], classify_transition(br.sample_lo, br.sample_hi, _thresholds(cfg)), [br],
        )
        _write(cfg.out, serialize.dumps(serialize.report_to_dict(rep, cfg.to_dict())))
    print(f"{br.lo!r} {br.hi!r}")
    return EXIT_OK


def cmd_gap(cfg: RunConfig) -> int:
    svm = cfg.build_model()
    sets = refine_minimal_sets(svm, cfg.domain, cfg.depth_max, None, "forward", cfg.depth_start)
    rows = []
    for i, a in enumerate(sets):
        g = dual_gap(svm, a)
        g = g.reason if isinstance(g, EmptySet) else g
        lo, hi = a.cover.hull()
        rows.append({"set": i, "lo": lo.tolist(), "hi": hi.tolist(), "gap": g, "box_width": a.width})
        print(f"{i} {lo.tolist()} {hi.tolist()} {g!r}")
    if cfg.out:
        _write(cfg.out, serialize.dumps({"schema": "setdyn.gaps/1", "config": cfg.to_dict(), "gaps": rows}))
    return EXIT_OK


def cmd_dual(cfg: RunConfig) -> int:
    svm = cfg.build_model()
    sets = refine_minimal_sets(svm, cfg.domain, cfg.depth_max, None, "forward", cfg.depth_start)
    out_sets = []
    for i, a in enumerate(sets):
        graph = build_graph(svm, BoxCover.full(a.cover.domain, a.depth))
        ds = dual_set(graph, as_mask(graph, a.cover))
        if not isinstance(ds, np.ndarray):
            print(f"{i} {ds.reason}")
            continue
        cover = nodes_to_cover(graph, ds)
        out_sets.append(MinimalSetApproximation(cover, "dual_set", [(a.depth, len(cover), None)], False))
        lo, hi = cover.hull()
        print(f"{i} dual set hull={lo.tolist()}..{hi.tolist()} boxes={len(cover)}")
    _write(cfg.out or "dual.json", serialize.dumps(serialize.covers_to_dict(out_sets, cfg.to_dict())))
    return EXIT_OK


def cmd_plot(args) -> int:
    try:
        doc = json.loads(Path(args.input).read_text())
        svg = render(doc)
    except (UnknownSchema, json.JSONDecodeError, KeyError) as exc:
        print(f"cannot plot {args.input}: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    _write(args.out or str(Path(args.input).with_suffix(".svg")), svg)
    return EXIT_OK


COMMANDS = {
    "minimal": cmd_minimal,
    "continuation": cmd_continuation,
    "bracket": cmd_bracket,
    "gap": cmd_gap,
    "dual": cmd_dual,
}


def main(argv=None) -> int:
    argv = _glue_negative(list(sys.argv[1:] if argv is None else argv))
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_usage(sys.stderr)
            return EXIT_USAGE
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        configure_threads()
        if args.command == "plot":
            return cmd_plot(args)
        cfg = resolve_config(args)
        return COMMANDS[args.command](cfg)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SetDynError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
