"""Outer approximation of minimal sets by adaptive subdivision.

At each depth the transition graph is built on the current candidate cover,
its terminal components (in the chosen orientation) are reported, and every
recurrent box survives to the next depth together with one ring of
neighbours.  Keeping all recurrent boxes, not only the terminal ones, matters:
a minimal set that is still glued to a neighbour at a coarse depth only
separates later, and it must not have been thrown away by then.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidCover, NonConvergence, NotInvariant, RefinementLimit, UnsupportedParameter
from .geometry import BoxCover, WorkingDomain, coarsen, hausdorff_dist, ring, subdivide
from .graph import (
    TransitionGraph,
    as_mask,
    build_graph,
    is_forward_invariant,
    nodes_to_cover,
    reachable,
    terminal_sccs,
)
from .models import SetValuedMap, check_absorbing, check_contraction_certificate

log = logging.getLogger(__name__)

SIDES = ("forward", "dual")


@dataclass
class MinimalSetApproximation:
    """One minimal set (forward) or dual minimal set, followed across depths.

    ``depth_history`` holds ``(depth, n_boxes, hausdorff_step)`` where the step
    is the distance to the matched approximation one depth earlier (``None``
    at the first depth it was seen).
    """

    cover: BoxCover
    side: str
    depth_history: list = field(default_factory=list)
    certified_forward_invariant: bool = False

    @property
    def depth(self) -> int:
        return self.cover.depth

    @property
    def width(self) -> float:
        return float(self.cover.widths.max())

    def hull(self):
        return self.cover.hull()


def _oriented(graph: TransitionGraph, side: str) -> TransitionGraph:
    return graph if side == "forward" else graph.dual()


def _match_parent(child: BoxCover, parents: list[BoxCover]):
    """Index of the parent sharing the most boxes with ``child`` coarsened."""
    if not parents:
        return None
    coarse = coarsen(child, parents[0].depth)
    best, best_key = None, None
    for i, p in enumerate(parents):
        shared = np.intersect1d(coarse.keys, p.keys, assume_unique=True).size
        if shared == 0:
            continue
        # most overlap, then smaller distance, then leftmost
        key = (-shared, hausdorff_dist(child, p), i)
        if best_key is None or key < best_key:
            best, best_key = i, key
    return best


def refine_minimal_sets(
    svm: SetValuedMap,
    domain: WorkingDomain,
    max_depth: int,
    tol: float | None = None,
    side: str = "forward",
    start_depth: int | None = None,
    add_ring: bool = True,
) -> list[MinimalSetApproximation]:
    """Approximate every minimal set of ``svm`` in ``domain``.

    Refines until the boxes are narrower than ``tol`` and every approximation
    moved less than ``tol`` (Hausdorff) since the previous depth, or until ``max_depth``.  With ``tol=None`` it
    simply stops at ``max_depth``.  If ``tol`` is given and not met,
    :class:`RefinementLimit` is raised with the partial result attached.
    """
    if side not in SIDES:
        raise ValueError(f"side must be one of {SIDES}")
    limit = min(int(max_depth), domain.max_depth())
    depth = min(limit, 4 if start_depth is None else int(start_depth))
    check_absorbing(svm, domain)
    cover = BoxCover.full(domain, depth)
    lineages: list[MinimalSetApproximation] = []
    while True:
        graph = build_graph(svm, cover, incoming=(side == "dual"))
        og = _oriented(graph, side)
        terms = terminal_sccs(og)
        covers = [nodes_to_cover(graph, t) for t in terms]
        parents = [l.cover for l in lineages]
        new = []
        for c, t in zip(covers, terms):
            j = _match_parent(c, parents)
            hist = list(lineages[j].depth_history) if j is not None else []
            step = hausdorff_dist(c, parents[j]) if j is not None else None
            hist.append((depth, len(c), step))
            new.append(MinimalSetApproximation(c, side, hist, is_forward_invariant(og, t)))
        lineages = new
        log.debug("depth %d: %d candidate boxes, %d terminal sets", depth, len(cover), len(new))
        # a zero step on a coarse grid says nothing, so the boxes must be finer than tol too
        converged = (
            tol is not None
            and bool(new)
            and float(cover.widths.max()) < tol
            and all(l.depth_history[-1][2] is not None and l.depth_history[-1][2] < tol for l in new)
        )
        if converged or depth >= limit:
            break
        keep = graph.recurrent()
        if not keep.any():
            break
        cover = subdivide(nodes_to_cover(graph, keep))
        if add_ring:
            cover = ring(cover)
        depth += 1
    if tol is not None and not converged:
        raise RefinementLimit(f"tolerance {tol} not reached by depth {depth}", partial=lineages)
    return lineages


@dataclass
class FixedCover:
    """Result of iterating the cover map to a fixed point."""

    approximation: MinimalSetApproximation
    iterations: int
    steps: list  # Hausdorff distance between consecutive iterates
    measured_factor: float  # max (h[k+1] - box width) / h[k]
    certified_factor: float


def contract_to_fixed_cover(
    svm: SetValuedMap,
    domain: WorkingDomain,
    depth: int,
    max_iters: int = 500,
    seed: BoxCover | None = None,
) -> FixedCover:
    """Iterate ``cover -> boxes hit by its image`` until it stops changing.

    The map must carry a contraction certificate.  Starting from ``seed``
    (default: the full domain) the iteration settles on a fixed cover.  On a
    grid there can be several nested fixed covers a box or two apart, since
    a boundary box may feed itself; the greatest one is found from a large
    seed.  The result is therefore shrunk to the least fixed cover inside it,
    the forward closure of its recurrent core, which does not depend on the
    seed.
    """
    cert = check_contraction_certificate(svm)
    if not cert.certified:
        raise UnsupportedParameter(f"no contraction certificate for {svm!r} (factor {cert.factor})")
    check_absorbing(svm, domain)
    full = BoxCover.full(domain, depth)
    graph = build_graph(svm, full)
    cur = np.ones(graph.n, dtype=bool) if seed is None else as_mask(graph, seed)
    steps = []
    prev_cover = nodes_to_cover(graph, cur)
    for it in range(1, max_iters + 1):
        nxt = graph.step(cur)
        if np.array_equal(nxt, cur):
            break
        nxt_cover = nodes_to_cover(graph, nxt)
        steps.append(hausdorff_dist(nxt_cover, prev_cover))
        cur, prev_cover = nxt, nxt_cover
    else:
        raise NonConvergence(f"no fixed cover after {max_iters} iterations", factor=_factor(steps))
    terms = terminal_sccs(graph)
    core = np.zeros(graph.n, dtype=bool)
    for t in terms:
        core[t] = True
    core &= cur
    least = as_mask(graph, reachable(graph, core)) if core.any() else cur
    cover = nodes_to_cover(graph, least)
    approx = MinimalSetApproximation(
        cover, "forward", [(depth, len(cover), steps[-1] if steps else 0.0)], is_forward_invariant(graph, least)
    )
    return FixedCover(approx, it, steps, _factor(steps, float(full.widths.max())), cert.factor)


def _factor(steps, slack=0.0):
    """Worst ratio of successive moves after forgiving ``slack`` of snapping."""
    ratios = [max(b - slack, 0.0) / a for a, b in zip(steps, steps[1:]) if a > 0]
    return max(ratios) if ratios else 0.0


@dataclass
class MinimalityVerdict:
    minimal: bool
    splits_into: list = field(default_factory=list)

    def __bool__(self):
        return self.minimal


def check_minimality(graph: TransitionGraph, nodes) -> MinimalityVerdict:
    """Whether the forward invariant node set ``nodes`` is one strongly connected piece.

    If not, ``splits_into`` lists the terminal components inside it, each a
    smaller invariant set witnessing non-minimality.
    """
    mask = as_mask(graph, nodes)
    if not mask.any():
        raise InvalidCover("node set must be nonempty")
    if not is_forward_invariant(graph, mask):
        raise NotInvariant("node set is not forward invariant")
    first = np.zeros(graph.n, dtype=bool)
    first[np.flatnonzero(mask)[0]] = True
    if np.array_equal(graph.closure(first), mask) and not (mask & ~graph.back_closure(first)).any():
        if graph.recurrent()[mask].all():
            return MinimalityVerdict(True, [np.flatnonzero(mask)])
    # invariance makes the terminal components of the restriction global ones
    parts = [t for t in terminal_sccs(graph) if mask[t].all()]
    return MinimalityVerdict(False, parts)


__all__ = [
    "FixedCover",
    "MinimalSetApproximation",
    "MinimalityVerdict",
    "check_minimality",
    "contract_to_fixed_cover",
    "refine_minimal_sets",
]
