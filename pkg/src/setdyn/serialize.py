"""JSON and CSV serialization of covers, graphs and continuation reports.

Floats are written with 17 significant digits, which round-trips every
binary64 value exactly.  Output is deterministic: keys keep insertion order
and no timestamps are recorded.
"""

from __future__ import annotations

import csv
import io
import json
import math

import numpy as np

from .continuation import Bracket, ContinuationReport, Sample, Thresholds, TransitionEvent
from .errors import SetDynError
from .geometry import BoxCover, WorkingDomain, merged_intervals
from .graph import TransitionGraph
from .minimal import MinimalSetApproximation

COVERS = "setdyn.covers/1"
GRAPH = "setdyn.graph/1"
REPORT = "setdyn.report/1"

REPORT_NOTE = (
    "transitions are graded from jumps in the minimal-set covers between neighbouring samples; "
    "topological conjugacy of the dynamics across the sweep is not tested"
)


class UnknownSchema(SetDynError, ValueError):
    pass


# ------------------------------------------------------------- json writer


def _fmt_float(x: float) -> str:
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    s = format(x, ".17g")
    if not any(c in s for c in ".en"):
        s += ".0"
    return s


def dumps(obj, indent: int = 1) -> str:
    """Deterministic JSON with 17-significant-digit floats."""
    out = io.StringIO()
    _write(obj, out, indent, 0)
    out.write("\n")
    return out.getvalue()


def _write(obj, out, indent, level):
    pad = "\n" + " " * (indent * (level + 1))
    end = "\n" + " " * (indent * level)
    if isinstance(obj, (bool, np.bool_)):
        out.write("true" if obj else "false")
    elif obj is None:
        out.write("null")
    elif isinstance(obj, (int, np.integer)):
        out.write(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.write(_fmt_float(float(obj)))
    elif isinstance(obj, str):
        out.write(json.dumps(obj))
    elif isinstance(obj, dict):
        if not obj:
            out.write("{}")
            return
        out.write("{")
        for i, (k, v) in enumerate(obj.items()):
            out.write(("," if i else "") + pad + json.dumps(str(k)) + ": ")
            _write(v, out, indent, level + 1)
        out.write(end + "}")
    elif isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        # flat lists of scalars stay on one line
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in seq):
            out.write("[")
            for i, v in enumerate(seq):
                out.write(", " if i else "")
                _write(v, out, indent, level + 1)
            out.write("]")
            return
        out.write("[")
        for i, v in enumerate(seq):
            out.write(("," if i else "") + pad)
            _write(v, out, indent, level + 1)
        out.write(end + "]")
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__}")


def loads(text: str):
    return json.loads(text)


# ------------------------------------------------------------ conversions


def domain_to_dict(d: WorkingDomain) -> dict:
    return {"lo": list(d.lo), "hi": list(d.hi)}


def domain_from_dict(d) -> WorkingDomain:
    return WorkingDomain(tuple(d["lo"]), tuple(d["hi"]))


def cover_to_dict(c: BoxCover) -> dict:
    return {"domain": domain_to_dict(c.domain), "depth": c.depth, "boxes": c.coords.tolist()}


def cover_from_dict(d) -> BoxCover:
    dom = domain_from_dict(d["domain"])
    if "boxes" in d:
        coords = np.asarray(d["boxes"], dtype=np.int64).reshape(-1, dom.dimension)
        return BoxCover(dom, int(d["depth"]), coords)
    # compact form: linear grid keys
    return BoxCover.from_keys(dom, int(d["depth"]), np.unique(np.asarray(d["keys"], dtype=np.int64)))


def _history_to_list(h):
    return [[int(d), int(n), s] for d, n, s in h]


def _history_from_list(h):
    return [(int(d), int(n), None if s is None else float(s)) for d, n, s in h]


def approx_to_dict(a: MinimalSetApproximation) -> dict:
    d = {"side": a.side, "certified_forward_invariant": bool(a.certified_forward_invariant)}
    if a.cover.dimension == 1:
        lo, hi = merged_intervals(a.cover)
        d["intervals"] = [[float(x), float(y)] for x, y in zip(lo, hi)]
    d["depth_history"] = _history_to_list(a.depth_history)
    d["cover"] = cover_to_dict(a.cover)
    return d


def approx_from_dict(d) -> MinimalSetApproximation:
    return MinimalSetApproximation(
        cover_from_dict(d["cover"]),
        d["side"],
        _history_from_list(d["depth_history"]),
        bool(d["certified_forward_invariant"]),
    )


def covers_to_dict(approxs, config: dict | None = None, extra: dict | None = None) -> dict:
    d = {"schema": COVERS}
    if config is not None:
        d["config"] = config
    if extra:
        d.update(extra)
    d["sets"] = [approx_to_dict(a) for a in approxs]
    return d


def covers_from_dict(d) -> list[MinimalSetApproximation]:
    _expect(d, COVERS)
    return [approx_from_dict(x) for x in d["sets"]]


def graph_to_dict(g: TransitionGraph) -> dict:
    return {
        "schema": GRAPH,
        "reversed": bool(g.reversed),
        "cover": cover_to_dict(g.cover),
        "indptr": g.indptr.tolist(),
        "range_start": g.rstart.tolist(),
        "range_stop": g.rstop.tolist(),
        "out_escape": np.flatnonzero(g.out_escape).tolist(),
        "in_escape": None if g.in_escape is None else np.flatnonzero(g.in_escape).tolist(),
    }


def graph_from_dict(d) -> TransitionGraph:
    _expect(d, GRAPH)
    cover = cover_from_dict(d["cover"])
    n = len(cover)

    def mask(idx):
        m = np.zeros(n, dtype=bool)
        m[np.asarray(idx, dtype=np.int64)] = True
        return m

    return TransitionGraph(
        cover,
        np.asarray(d["indptr"], dtype=np.int64),
        np.asarray(d["range_start"], dtype=np.int64),
        np.asarray(d["range_stop"], dtype=np.int64),
        mask(d["out_escape"]),
        None if d["in_escape"] is None else mask(d["in_escape"]),
        bool(d["reversed"]),
    )


def edge_list(g: TransitionGraph) -> str:
    """Plain ``source target`` lines in the graph's orientation."""
    src, dst = g.edges()
    return "".join(f"{a} {b}\n" for a, b in zip(src.tolist(), dst.tolist()))


def sample_to_dict(s: Sample) -> dict:
    return {"param": s.param, "depth": s.depth, "side": s.side, "sets": [approx_to_dict(a) for a in s.sets]}


def sample_from_dict(d) -> Sample:
    return Sample(float(d["param"]), int(d["depth"]), d["side"], [approx_from_dict(a) for a in d["sets"]])


def event_to_dict(e: TransitionEvent) -> dict:
    return {
        "kind": e.kind,
        "param_lo": e.param_lo,
        "param_hi": e.param_hi,
        "lineages_lo": list(e.lineages_lo),
        "lineages_hi": list(e.lineages_hi),
        "evidence": dict(e.evidence),
    }


def event_from_dict(d) -> TransitionEvent:
    return TransitionEvent(
        d["kind"], float(d["param_lo"]), float(d["param_hi"]),
        tuple(d["lineages_lo"]), tuple(d["lineages_hi"]), dict(d["evidence"]),
    )


def bracket_to_dict(b: Bracket) -> dict:
    return {
        "kind": b.kind,
        "lo": b.lo,
        "hi": b.hi,
        "depth": b.depth,
        "history": [[lo, hi, d] for lo, hi, d in b.history],
        "sample_lo": sample_to_dict(b.sample_lo),
        "sample_hi": sample_to_dict(b.sample_hi),
    }


def bracket_from_dict(d) -> Bracket:
    return Bracket(
        d["kind"], float(d["lo"]), float(d["hi"]), int(d["depth"]),
        sample_from_dict(d["sample_lo"]), sample_from_dict(d["sample_hi"]),
        [(float(lo), float(hi), int(dp)) for lo, hi, dp in d["history"]],
    )


def report_to_dict(r: ContinuationReport, config: dict | None = None) -> dict:
    d = {"schema": REPORT, "note": REPORT_NOTE}
    if config is not None:
        d["config"] = config
    d.update(
        {
            "model": r.model,
            "params": dict(r.params),
            "param_name": r.param_name,
            "domain": domain_to_dict(r.domain),
            "depth": r.depth,
            "side": r.side,
            "thresholds": r.thresholds_dict(),
            "events": [event_to_dict(e) for e in r.events],
            "brackets": [bracket_to_dict(b) for b in r.brackets],
            "samples": [sample_to_dict(s) for s in r.samples],
            "dual_samples": [sample_to_dict(s) for s in r.dual_samples],
            "failures": [[p, msg] for p, msg in r.failures],
        }
    )
    return d


def report_from_dict(d) -> ContinuationReport:
    _expect(d, REPORT)
    return ContinuationReport(
        d["model"],
        {k: float(v) for k, v in d["params"].items()},
        d["param_name"],
        domain_from_dict(d["domain"]),
        int(d["depth"]),
        d["side"],
        Thresholds.from_dict(d["thresholds"]),
        [sample_from_dict(s) for s in d["samples"]],
        [event_from_dict(e) for e in d["events"]],
        [bracket_from_dict(b) for b in d["brackets"]],
        [sample_from_dict(s) for s in d.get("dual_samples", [])],
        [(float(p), str(msg)) for p, msg in d.get("failures", [])],
    )


def _expect(d, schema):
    if not isinstance(d, dict) or d.get("schema") != schema:
        got = d.get("schema") if isinstance(d, dict) else type(d).__name__
        raise UnknownSchema(f"expected schema {schema!r}, got {got!r}")


def schema_of(d) -> str:
    s = d.get("schema") if isinstance(d, dict) else None
    if s not in (COVERS, GRAPH, REPORT):
        raise UnknownSchema(f"unknown schema {s!r}")
    return s


# --------------------------------------------------------------------- csv


def report_csv(r: ContinuationReport) -> str:
    """One row per (sample, set, interval piece) with its hull per axis."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["side", r.param_name, "depth", "set", "piece", "lo", "hi"])
    for samples in (r.samples, r.dual_samples):
        for s in samples:
            for i, a in enumerate(s.sets):
                if a.cover.dimension == 1:
                    los, his = merged_intervals(a.cover)
                    pieces = zip(los, his)
                else:
                    lo, hi = a.cover.hull()
                    pieces = [(";".join(_fmt_float(v) for v in lo), ";".join(_fmt_float(v) for v in hi))]
                for k, (lo, hi) in enumerate(pieces):
                    lo = lo if isinstance(lo, str) else _fmt_float(float(lo))
                    hi = hi if isinstance(hi, str) else _fmt_float(float(hi))
                    w.writerow([s.side, _fmt_float(s.param), s.depth, i, k, lo, hi])
    return buf.getvalue()


def events_csv(r: ContinuationReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["kind", "param_lo", "param_hi", "lineages_lo", "lineages_hi"])
    for e in r.events:
        w.writerow([
            e.kind, _fmt_float(e.param_lo), _fmt_float(e.param_hi),
            " ".join(map(str, e.lineages_lo)), " ".join(map(str, e.lineages_hi)),
        ])
    return buf.getvalue()
