"""Transition graphs on box covers and the graph algorithms built on them.

Node ``i`` of a graph is box ``cover.keys[i]``.  There is an edge ``i -> j``
when the closed image enclosure of box ``i`` meets closed box ``j`` (touching
faces count).  Parts of an image that fall on boxes outside a restricted
cover are recorded as an *out-escape* flag on the source node; boxes outside
the cover whose images land inside it flag the target with an *in-escape*.

Node sets are passed around as sorted ``int64`` index arrays or boolean
masks.  Results are sorted index arrays, or an :class:`EmptySet` marker.
"""

from __future__ import annotations

import numpy as np

from . import kernels
from .errors import GLOBALLY_ATTRACTIVE, EmptySet, InvalidCover, NotAbsorbing, NotInvariant
from .geometry import BoxCover, decode, encode, expand_ranges, snap
from .models import SetValuedMap

# images may overshoot the domain by rounding noise; anything larger is a
# genuine escape
ABSORB_TOL = 1e-9
# largest grid we are willing to scan for incoming escapes
MAX_SCAN_CELLS = 1 << 26
_CHUNK = 1 << 20


class TransitionGraph:
    """Range-compressed directed graph over the boxes of a cover.

    ``reversed`` marks the dual graph: same storage, edges read backwards.
    """

    def __init__(self, cover, indptr, rstart, rstop, out_escape, in_escape=None, reversed=False, _cache=None):
        self.cover = cover
        self.indptr = indptr
        self.rstart = rstart
        self.rstop = rstop
        self.out_escape = out_escape
        self.in_escape = in_escape
        self.reversed = reversed
        # SCCs do not depend on orientation, so a graph and its dual share them
        self._cache = {} if _cache is None else _cache

    @property
    def n(self) -> int:
        return len(self.cover)

    def __len__(self):
        return self.n

    def __repr__(self):
        kind = "dual " if self.reversed else ""
        return f"<{kind}TransitionGraph n={self.n} ranges={len(self.rstart)} depth={self.cover.depth}>"

    def __eq__(self, other):
        if not isinstance(other, TransitionGraph):
            return NotImplemented
        a, b = self.edges(), other.edges()
        return self.cover == other.cover and np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])

    __hash__ = None

    def dual(self) -> TransitionGraph:
        return TransitionGraph(
            self.cover, self.indptr, self.rstart, self.rstop,
            self.out_escape, self.in_escape, not self.reversed, self._cache,
        )

    # -- orientation-aware primitives -----------------------------------
    @property
    def escape(self) -> np.ndarray:
        """Nodes with an edge (in this orientation) to somewhere outside the cover."""
        esc = self.in_escape if self.reversed else self.out_escape
        if esc is None:
            raise InvalidCover("incoming escapes unknown; build the graph with incoming=True")
        return esc

    def closure(self, mask, steps=-1) -> np.ndarray:
        fn = kernels.reverse_closure if self.reversed else kernels.forward_closure
        return fn(self.indptr, self.rstart, self.rstop, mask, steps)

    def back_closure(self, mask, steps=-1) -> np.ndarray:
        fn = kernels.forward_closure if self.reversed else kernels.reverse_closure
        return fn(self.indptr, self.rstart, self.rstop, mask, steps)

    def step(self, mask) -> np.ndarray:
        fn = kernels.reverse_image if self.reversed else kernels.forward_image
        return fn(self.indptr, self.rstart, self.rstop, mask)

    def edges(self):
        """Explicit (source, target) arrays in this graph's orientation, sorted."""
        counts = np.diff(self.indptr)
        owner = np.repeat(np.arange(self.n, dtype=np.int64), counts)
        lengths = self.rstop - self.rstart
        src = np.repeat(owner, lengths)
        dst = expand_ranges(self.rstart, self.rstop)
        if self.reversed:
            src, dst = dst, src
        order = np.lexsort((dst, src))
        return src[order], dst[order]

    def successors(self, v: int) -> np.ndarray:
        mask = np.zeros(self.n, dtype=bool)
        mask[v] = True
        return np.flatnonzero(self.step(mask))

    # -- components -----------------------------------------------------
    def components(self):
        """``(comp, ncomp, nontrivial_comp)``; cached and shared with the dual."""
        if "scc" not in self._cache:
            comp, ncomp = kernels.scc(self.indptr, self.rstart, self.rstop)
            size = np.bincount(comp, minlength=ncomp)
            loops = kernels.self_loops(self.indptr, self.rstart, self.rstop)
            nontrivial = (size > 1) | (np.bincount(comp, weights=loops, minlength=ncomp) > 0)
            self._cache["scc"] = (comp, ncomp, nontrivial)
        return self._cache["scc"]

    def recurrent(self) -> np.ndarray:
        """Mask of nodes lying on a cycle."""
        comp, _, nontrivial = self.components()
        return nontrivial[comp]

    def _leaving(self):
        """Per component: edges to another component (in stored orientation)."""
        if "leaving" not in self._cache:
            comp, ncomp, _ = self.components()
            n = self.n
            counts = np.diff(self.indptr)
            rc = np.repeat(comp, counts)
            # comp-major sort of nodes: K[pos] = comp * n + idx
            K = np.sort(comp * n + np.arange(n, dtype=np.int64))
            a = np.searchsorted(K, rc * n + self.rstart)
            b = np.searchsorted(K, rc * n + self.rstop)
            inside = b - a
            leaves = np.zeros(ncomp, dtype=bool)
            np.logical_or.at(leaves, rc, inside < (self.rstop - self.rstart))
            # coverage of each node by ranges from its own component vs all ranges
            total = np.cumsum(
                np.bincount(self.rstart, minlength=n + 1) - np.bincount(self.rstop, minlength=n + 1)
            )[:n]
            own_pos = np.cumsum(np.bincount(a, minlength=n + 1) - np.bincount(b, minlength=n + 1))[:n]
            own = np.empty(n, dtype=np.int64)
            own[K % n] = own_pos
            entered = np.zeros(ncomp, dtype=bool)
            np.logical_or.at(entered, comp, total > own)
            self._cache["leaving"] = (leaves, entered)
        return self._cache["leaving"]

    def terminal_components(self) -> np.ndarray:
        """Ids of nontrivial components that no edge (in this orientation) leaves."""
        comp, ncomp, nontrivial = self.components()
        leaves, entered = self._leaving()
        exits = entered.copy() if self.reversed else leaves.copy()
        np.logical_or.at(exits, comp, self.escape)
        return np.flatnonzero(nontrivial & ~exits)


# ------------------------------------------------------------- construction


def _image_ranges(svm, cover, lo, hi, check_absorbing=True):
    """Key ranges hit by the enclosures of boxes ``lo``/``hi`` (closed test)."""
    dom = cover.domain
    owner, plo, phi = svm.enclose_many(lo, hi)
    dlo = np.asarray(dom.lo)
    dhi = np.asarray(dom.hi)
    if check_absorbing:
        slack = ABSORB_TOL * (dhi - dlo)
        bad = np.any(plo < dlo - slack, axis=1) | np.any(phi > dhi + slack, axis=1)
        if bad.any():
            i = int(owner[np.flatnonzero(bad)[0]])
            raise NotAbsorbing(
                f"image of box {lo[i].tolist()}..{hi[i].tolist()} leaves the working domain",
                box=(lo[i], hi[i]),
            )
    plo = np.clip(plo, dlo, dhi)
    phi = np.clip(phi, dlo, dhi)
    kmin, kmax = snap(plo, phi, dom, cover.depth, closed=True)
    piece, klo, khi = kernels.piece_key_ranges(kmin, kmax, cover.depth)
    return owner[piece], klo, khi


def build_graph(svm: SetValuedMap, cover: BoxCover, incoming: bool = False) -> TransitionGraph:
    """Transition graph of ``svm`` on ``cover``.

    With ``incoming=True`` the boxes outside a restricted cover are scanned
    too, so that the dual orientation knows which nodes are entered from
    outside.  On a full cover both escape masks are empty.
    """
    if svm.dimension != cover.dimension:
        raise InvalidCover(f"map dimension {svm.dimension} != cover dimension {cover.dimension}")
    n = len(cover)
    src, klo, khi = _image_ranges(svm, cover, cover.lo, cover.hi)
    start = np.searchsorted(cover.keys, klo, side="left")
    stop = np.searchsorted(cover.keys, khi, side="left")
    out_escape = np.zeros(n, dtype=bool)
    np.logical_or.at(out_escape, src, (stop - start) < (khi - klo))
    indptr, rstart, rstop = kernels.merge_owned_ranges(src, start, stop, n)
    n_grid = 1 << (cover.depth * cover.dimension)
    if n == n_grid:
        in_escape = np.zeros(n, dtype=bool)
    elif incoming:
        in_escape = _incoming_escapes(svm, cover, n_grid)
    else:
        in_escape = None
    return TransitionGraph(cover, indptr, rstart, rstop, out_escape, in_escape)


def _incoming_escapes(svm, cover, n_grid):
    if n_grid > MAX_SCAN_CELLS:
        raise InvalidCover(f"grid of {n_grid} cells is too large to scan for incoming escapes")
    diff = np.zeros(n_grid + 1, dtype=np.int64)
    in_cover = np.zeros(n_grid, dtype=bool)
    in_cover[cover.keys] = True
    outside = np.flatnonzero(~in_cover)
    w = cover.widths
    dlo = np.asarray(cover.domain.lo)
    for s in range(0, outside.size, _CHUNK):
        keys = outside[s : s + _CHUNK]
        coords = decode(keys, cover.depth, cover.dimension)
        lo = dlo + coords * w
        hi = dlo + (coords + 1) * w
        _, klo, khi = _image_ranges(svm, cover, lo, hi)
        diff += np.bincount(klo, minlength=n_grid + 1) - np.bincount(khi, minlength=n_grid + 1)
    hit = np.cumsum(diff[:-1]) > 0
    return hit[cover.keys]


# ------------------------------------------------------------------ helpers


def as_mask(graph: TransitionGraph, nodes) -> np.ndarray:
    """Boolean mask from an index array, a mask or a sub-cover of the graph's cover."""
    if isinstance(nodes, EmptySet):
        return np.zeros(graph.n, dtype=bool)
    if isinstance(nodes, BoxCover):
        idx = np.searchsorted(graph.cover.keys, nodes.keys)
        if nodes.depth != graph.cover.depth or np.any(idx >= graph.n) or np.any(
            graph.cover.keys[np.minimum(idx, graph.n - 1)] != nodes.keys
        ):
            raise InvalidCover("node cover is not part of the graph's cover")
        nodes = idx
    arr = np.asarray(nodes)
    if arr.dtype == bool:
        if arr.shape != (graph.n,):
            raise InvalidCover("mask length does not match the graph")
        return arr.copy()
    arr = arr.astype(np.int64).ravel()
    if arr.size and (arr.min() < 0 or arr.max() >= graph.n):
        raise InvalidCover("node index out of range")
    mask = np.zeros(graph.n, dtype=bool)
    mask[arr] = True
    return mask


def _result(mask, reason="empty"):
    idx = np.flatnonzero(mask).astype(np.int64)
    return idx if idx.size else EmptySet(reason)


def nodes_to_cover(graph: TransitionGraph, nodes) -> BoxCover:
    mask = as_mask(graph, nodes)
    if not mask.any():
        raise InvalidCover("cannot build a cover from an empty node set")
    return BoxCover.from_keys(graph.cover.domain, graph.cover.depth, graph.cover.keys[mask])


def _seed(graph, seed):
    mask = as_mask(graph, seed)
    if not mask.any():
        raise InvalidCover("seed must be nonempty")
    return mask


# --------------------------------------------------------------- algorithms


def reachable(graph: TransitionGraph, seed, steps: int | None = None):
    """Nodes reached from ``seed`` by walks of length 0..steps (unbounded if None)."""
    mask = _seed(graph, seed)
    return _result(graph.closure(mask, -1 if steps is None else int(steps)))


def image(graph: TransitionGraph, seed, steps: int = 1):
    """Nodes reached by walks of exactly ``steps`` edges."""
    mask = _seed(graph, seed)
    for _ in range(int(steps)):
        mask = graph.step(mask)
        if not mask.any():
            return EmptySet("no successors")
    return _result(mask)


def terminal_sccs(graph: TransitionGraph) -> list[np.ndarray]:
    """Nontrivial SCCs with no edges or escapes leaving them, ordered by first node."""
    comp, _, _ = graph.components()
    term = graph.terminal_components()
    if term.size == 0:
        return []
    idx = np.flatnonzero(np.isin(comp, term))
    idx = idx[np.argsort(comp[idx], kind="stable")]
    cuts = np.flatnonzero(np.diff(comp[idx])) + 1
    groups = np.split(idx, cuts)
    return sorted(groups, key=lambda g: int(g[0]))


def is_forward_invariant(graph: TransitionGraph, nodes) -> bool:
    """No edge or escape leaves ``nodes`` in this graph's orientation."""
    mask = as_mask(graph, nodes)
    if (graph.escape & mask).any():
        return False
    return not (graph.step(mask) & ~mask).any()


def omega_limit(graph: TransitionGraph, seed):
    """Nodes visited by arbitrarily long walks from ``seed``."""
    reach = graph.closure(_seed(graph, seed))
    cyc = reach & graph.recurrent()
    if not cyc.any():
        return EmptySet("no cycles reachable")
    return _result(graph.closure(cyc))


def domain_of_attraction(graph: TransitionGraph, m):
    """Nodes from which no walk can reach another attractor or leave the cover.

    Attractors are the terminal components; the invariant set ``m`` must be
    a union of some of them (or any forward invariant node set).  A node that
    can only end up in ``m`` belongs to the domain even if it also sits on a
    non-terminal cycle, since on a grid a box next to a stable edge of ``m``
    often feeds itself without that meaning anything for the dynamics.
    """
    mask = as_mask(graph, m)
    if not mask.any():
        raise InvalidCover("invariant set must be nonempty")
    if not is_forward_invariant(graph, mask):
        raise NotInvariant("node set is not forward invariant")
    comp, _, _ = graph.components()
    attractors = np.isin(comp, graph.terminal_components())
    bad = (attractors & ~mask) | graph.escape
    if not bad.any():
        return _result(np.ones(graph.n, dtype=bool))
    return _result(~graph.back_closure(bad), "no attraction")


def boundary(graph: TransitionGraph, nodes) -> np.ndarray:
    """Mask of nodes in ``nodes`` touching (face or corner) a box outside it.

    Grid boxes missing from a restricted cover count as outside.
    """
    mask = as_mask(graph, nodes)
    cover = graph.cover
    inside_keys = cover.keys[mask]
    coords = cover.coords[mask]
    d = cover.dimension
    n_cells = 1 << cover.depth
    offsets = np.array(np.meshgrid(*([[-1, 0, 1]] * d), indexing="ij")).reshape(d, -1).T
    offsets = offsets[np.any(offsets != 0, axis=1)]
    hit = np.zeros(coords.shape[0], dtype=bool)
    for off in offsets:
        nb = coords + off
        valid = np.all((nb >= 0) & (nb < n_cells), axis=1)
        keys = encode(np.clip(nb, 0, n_cells - 1), cover.depth)
        pos = np.searchsorted(inside_keys, keys)
        found = (pos < inside_keys.size) & (inside_keys[np.minimum(pos, inside_keys.size - 1)] == keys)
        hit |= valid & ~found
    out = np.zeros(graph.n, dtype=bool)
    out[np.flatnonzero(mask)[hit]] = True
    return out


def robust_domain(graph: TransitionGraph, m):
    """Domain of attraction minus every node that can reach its boundary."""
    att = domain_of_attraction(graph, m)
    if isinstance(att, EmptySet):
        return att
    mask = as_mask(graph, att)
    edge = boundary(graph, mask)
    if not edge.any():
        return _result(mask)
    return _result(mask & ~graph.back_closure(edge), "no robust part")


def dual_set(graph: TransitionGraph, m):
    """Complement of the robust domain of attraction of ``m``.

    Returns the ``GLOBALLY_ATTRACTIVE`` marker when ``m`` attracts every node.
    """
    att = domain_of_attraction(graph, m)
    if not isinstance(att, EmptySet) and att.size == graph.n:
        return GLOBALLY_ATTRACTIVE
    rob = robust_domain(graph, m)
    mask = ~as_mask(graph, rob)
    return _result(mask)
