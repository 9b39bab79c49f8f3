"""Parameter sweeps, transition classification and bifurcation bracketing.

Minimal sets at neighbouring parameter values are matched by overlap of
their slightly inflated covers.  Matched groups are then compared by their
two one-sided Hausdorff semi-distances, measured in box widths:

* both small: the sets moved continuously;
* one small and the other large: the set exploded (it suddenly grew);
* a set with no partner: it appeared or disappeared;
* two nearby sets sharing one partner: a merge that may be a discontinuity
  of the underlying map rather than an explosion.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import DepthMismatch, EmptySet, EventLost, SetDynError
from .geometry import BoxCover, WorkingDomain, gap_dist, inflate, semi_dist, union
from .graph import as_mask, build_graph, dual_set, nodes_to_cover
from .minimal import MinimalSetApproximation, refine_minimal_sets
from .models import SetValuedMap

log = logging.getLogger(__name__)

KINDS = ("continuous", "explosion", "appearance", "disappearance", "merge_candidate")


@dataclass(frozen=True)
class Thresholds:
    """Classification thresholds, all in multiples of the box width."""

    continuity: float = 3.0
    explosion: float = 10.0
    delta: float = 5.0
    merge: float = 10.0
    # how far the smaller set may stick out of the larger one in an explosion
    one_sided: float = 2.0

    @classmethod
    def from_dict(cls, d) -> Thresholds:
        return cls(**{k: float(v) for k, v in d.items()})


@dataclass
class Sample:
    """Minimal sets (forward or dual) of one family member at one depth."""

    param: float
    depth: int
    side: str
    sets: list

    @property
    def covers(self) -> list[BoxCover]:
        return [s.cover for s in self.sets]


@dataclass
class TransitionEvent:
    kind: str
    param_lo: float
    param_hi: float
    lineages_lo: tuple  # indices into the lower sample's sets
    lineages_hi: tuple
    evidence: dict = field(default_factory=dict)


@dataclass
class Bracket:
    kind: str
    lo: float
    hi: float
    depth: int
    sample_lo: Sample
    sample_hi: Sample
    history: list = field(default_factory=list)  # (lo, hi, depth) per halving

    @property
    def width(self) -> float:
        return self.hi - self.lo


@dataclass
class ContinuationReport:
    model: str
    params: dict
    param_name: str
    domain: WorkingDomain
    depth: int
    side: str
    thresholds: Thresholds
    samples: list
    events: list
    brackets: list = field(default_factory=list)
    # optional dual-side samples over the same grid, for plotting
    dual_samples: list = field(default_factory=list)
    # (param, error message) for grid points that could not be refined
    failures: list = field(default_factory=list)

    def counts(self) -> list[tuple[float, int]]:
        return [(s.param, len(s.sets)) for s in self.samples]

    def transitions(self, kinds=None) -> list[TransitionEvent]:
        kinds = tuple(k for k in KINDS if k != "continuous") if kinds is None else tuple(kinds)
        return [e for e in self.events if e.kind in kinds]

    def thresholds_dict(self) -> dict:
        return asdict(self.thresholds)


# ------------------------------------------------------------------ sampling


class Sampler:
    """Caches refinements by (parameter value, depth)."""

    def __init__(self, family: SetValuedMap, param_name: str, domain: WorkingDomain, side: str = "forward",
                 start_depth: int | None = None):
        self.family = family
        self.param_name = param_name
        self.domain = domain
        self.side = side
        self.start_depth = start_depth
        self._cache = {}

    def member(self, value: float) -> SetValuedMap:
        return self.family.with_params(**{self.param_name: float(value)})

    def __call__(self, value: float, depth: int) -> Sample:
        key = (float(value), int(depth))
        if key not in self._cache:
            sets = refine_minimal_sets(
                self.member(value), self.domain, depth, None, self.side, start_depth=self.start_depth
            )
            self._cache[key] = Sample(float(value), int(depth), self.side, sets)
        return self._cache[key]


def sweep(
    family: SetValuedMap,
    param_name: str,
    grid,
    domain: WorkingDomain,
    depth: int,
    side: str = "forward",
    thresholds: Thresholds | None = None,
) -> ContinuationReport:
    """Refine every grid member to ``depth`` and classify consecutive pairs.

    A grid point whose refinement fails (for instance a parameter value with
    no absorbing domain) is recorded in ``failures`` and skipped; its
    neighbours are then compared directly.
    """
    thresholds = thresholds or Thresholds()
    grid = [float(v) for v in grid]
    if not grid:
        raise ValueError("empty parameter grid")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("parameter grid must be strictly increasing")
    sampler = Sampler(family, param_name, domain, side)
    samples, failures = [], []
    for v in grid:
        try:
            samples.append(sampler(v, depth))
        except SetDynError as exc:
            log.warning("%s=%r failed: %s", param_name, v, exc)
            failures.append((v, f"{type(exc).__name__}: {exc}"))
    events = []
    for a, b in zip(samples, samples[1:]):
        events.extend(classify_transition(a, b, thresholds))
    return ContinuationReport(
        family.name, dict(family.params), param_name, domain, depth, side, thresholds, samples, events,
        failures=failures,
    )


# ------------------------------------------------------------ classification


def _union_all(covers):
    out = covers[0]
    for c in covers[1:]:
        out = union(out, c)
    return out


def _best(row_overlap, dists):
    """Index with most overlap, then smaller distance, then leftmost; None if no overlap."""
    if row_overlap.max(initial=0) == 0:
        return None
    order = sorted(range(len(row_overlap)), key=lambda j: (-row_overlap[j], dists[j], j))
    return order[0]


def classify_transition(a: Sample, b: Sample, thresholds: Thresholds | None = None) -> list[TransitionEvent]:
    """Events between two samples refined to the same depth."""
    thr = thresholds or Thresholds()
    if a.depth != b.depth:
        raise DepthMismatch(f"samples at depths {a.depth} and {b.depth}")
    A, B = a.covers, b.covers
    if not A and not B:
        return []
    w = float((A or B)[0].widths.max())
    delta = thr.delta * w
    infA = [inflate(c, delta) for c in A]
    infB = [inflate(c, delta) for c in B]
    ov = np.array(
        [[np.intersect1d(x.keys, y.keys, assume_unique=True).size for y in infB] for x in infA], dtype=np.int64
    ).reshape(len(A), len(B))
    haus = np.array(
        [[max(semi_dist(x, y), semi_dist(y, x)) for y in B] for x in A], dtype=float
    ).reshape(len(A), len(B))

    # bipartite graph of best matches in either direction
    links = set()
    for i in range(len(A)):
        j = _best(ov[i], haus[i])
        if j is not None:
            links.add((i, j))
    for j in range(len(B)):
        i = _best(ov[:, j], haus[:, j])
        if i is not None:
            links.add((i, j))

    # connected components via a tiny union-find over ("a", i) / ("b", j)
    parent = {("a", i): ("a", i) for i in range(len(A))}
    parent.update({("b", j): ("b", j) for j in range(len(B))})

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for i, j in links:
        parent[find(("a", i))] = find(("b", j))
    groups = {}
    for node in parent:
        groups.setdefault(find(node), []).append(node)

    events = []
    for members in groups.values():
        I = tuple(sorted(i for s, i in members if s == "a"))
        J = tuple(sorted(j for s, j in members if s == "b"))
        events.append(_classify_group(a, b, I, J, w, thr))
    events.sort(key=lambda e: (e.lineages_lo or (len(A),), e.lineages_hi or (len(B),)))
    return events


def _classify_group(a, b, I, J, w, thr) -> TransitionEvent:
    def event(kind, **evidence):
        evidence["box_width"] = w
        return TransitionEvent(kind, a.param, b.param, I, J, evidence)

    if not I:
        return event("appearance")
    if not J:
        return event("disappearance")
    for sample, side in ((a, I), (b, J)):
        if len(side) < 2:
            continue
        covers = [sample.covers[k] for k in side]
        gap = min(gap_dist(x, y) for n, x in enumerate(covers) for y in covers[n + 1 :])
        if gap <= thr.merge * w:
            return event("merge_candidate", mutual_gap=gap, mutual_gap_boxes=gap / w)
    UA = _union_all([a.covers[i] for i in I])
    UB = _union_all([b.covers[j] for j in J])
    s_ab = semi_dist(UA, UB) / w
    s_ba = semi_dist(UB, UA) / w
    lo_s, hi_s = min(s_ab, s_ba), max(s_ab, s_ba)
    evidence = dict(semi_lo_to_hi=s_ab, semi_hi_to_lo=s_ba, hausdorff_boxes=hi_s)
    if hi_s <= thr.continuity:
        return event("continuous", resolved=True, **evidence)
    if hi_s > thr.explosion and lo_s <= thr.one_sided:
        # grows_toward names the parameter end where the sets are larger
        return event("explosion", grows_toward="hi" if s_ba > s_ab else "lo", **evidence)
    # matched but moved more than the grid can resolve
    return event("continuous", resolved=False, **evidence)


def has_kind(events, kind: str) -> bool:
    return any(e.kind == kind for e in events)


# ---------------------------------------------------------------- bracketing


def bracket_bifurcation(
    family: SetValuedMap,
    param_name: str,
    lo: float,
    hi: float,
    kind: str,
    domain: WorkingDomain,
    tol: float,
    start_depth: int = 10,
    max_depth: int | None = None,
    depth_step: int = 0,
    side: str = "forward",
    thresholds: Thresholds | None = None,
) -> Bracket:
    """Bisect ``[lo, hi]`` down to width ``tol`` around an event of ``kind``.

    With ``depth_step > 0`` each halving refines that many levels deeper (up
    to ``max_depth``) and the bracket ends are re-sampled at the new depth.
    The default keeps the depth fixed: classification compares drift against
    the box width, and deepening at the same rate as halving keeps that
    ratio constant, so a drifting set never looks continuous.  The count of
    minimal sets switches within a tiny distance of the true value even on a
    coarse grid.  Over a wide
    interval the sets also drift, which can hide the event's signature; a
    change in the number of sets then steers the bisection until the event
    itself is resolved, and between two halves that both show it the larger
    jump wins (slow drift can look like a jump once boxes get small).  The
    final bracket must show the event.
    """
    if kind not in KINDS or kind == "continuous":
        raise ValueError(f"cannot bracket {kind!r}")
    if not lo < hi:
        raise ValueError("need lo < hi")
    thr = thresholds or Thresholds()
    limit = domain.max_depth() if max_depth is None else min(int(max_depth), domain.max_depth())
    depth = min(int(start_depth), limit)
    sampler = Sampler(family, param_name, domain, side)
    a, b = sampler(lo, depth), sampler(hi, depth)
    if not any(_score(a, b, kind, thr)[1:3]):
        raise EventLost(f"no {kind} between {lo} and {hi} at depth {depth}", brackets=[(lo, hi)])
    history = [(lo, hi, depth)]
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        depth = min(depth + depth_step, limit)
        a, m, b = sampler(lo, depth), sampler(mid, depth), sampler(hi, depth)
        left, right = _score(a, m, kind, thr), _score(m, b, kind, thr)
        best = max(left, right)
        if not (best[1] or best[2]):
            raise EventLost(
                f"{kind} not found in either half of [{lo}, {hi}] at depth {depth}",
                brackets=[(lo, mid), (mid, hi)],
            )
        if left >= right:
            hi, b = mid, m
        else:
            lo, a = mid, m
        history.append((lo, hi, depth))
        log.info("bracket [%r, %r] at depth %d", lo, hi, depth)
    if not has_kind(classify_transition(a, b, thr), kind):
        raise EventLost(f"final bracket [{lo}, {hi}] shows no {kind}", brackets=[(lo, hi)])
    return Bracket(kind, lo, hi, depth, a, b, history)


def _score(a: Sample, b: Sample, kind: str, thr: Thresholds) -> tuple:
    """How strongly the interval between two samples shows the event.

    A change in the number of sets outranks a bare classification: once
    boxes are small, ordinary drift over a long interval can pass the
    explosion threshold.  A genuine jump keeps its size as the interval
    shrinks while drift shrinks with it, so within a tier the larger jump wins.
    """
    hits = [e for e in classify_transition(a, b, thr) if e.kind == kind]
    count_change = len(a.sets) != len(b.sets)
    size = max((e.evidence.get("hausdorff_boxes", 1.0) * e.evidence["box_width"] for e in hits), default=0.0)
    return (bool(hits) and count_change, count_change, bool(hits), size)


# ------------------------------------------------------------------ dual gap


def dual_gap(svm: SetValuedMap, m):
    """Distance between a minimal set's cover and its dual set.

    The dual set is the complement of the robust domain of attraction,
    computed on the full grid at the cover's depth.  Returns the
    ``GLOBALLY_ATTRACTIVE`` marker when the set attracts the whole domain.
    """
    cover = m.cover if isinstance(m, MinimalSetApproximation) else m
    full = BoxCover.full(cover.domain, cover.depth)
    graph = build_graph(svm, full)
    ds = dual_set(graph, as_mask(graph, cover))
    if isinstance(ds, EmptySet):
        return ds
    return gap_dist(cover, nodes_to_cover(graph, ds))


__all__ = [
    "Bracket",
    "ContinuationReport",
    "KINDS",
    "Sample",
    "Sampler",
    "Thresholds",
    "TransitionEvent",
    "bracket_bifurcation",
    "classify_transition",
    "dual_gap",
    "has_kind",
    "sweep",
]
