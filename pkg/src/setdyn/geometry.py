"""Dyadic boxes, box covers and Hausdorff distances under the sup-metric.

A :class:`BoxCover` is a finite union of same-depth boxes of a dyadic grid
anchored at a :class:`WorkingDomain`.  Boxes are stored as integer
coordinates; realized endpoints are ``lo + c * w`` with ``w`` a power-of-two
fraction of the domain width, so refinement never moves an endpoint.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DepthMismatch, DomainMismatch, EmptySet, InvalidCover, RefinementLimit
from .kernels import piece_key_ranges

DEFAULT_MAX_DEPTH = 40


@dataclass(frozen=True)
class WorkingDomain:
    lo: tuple
    hi: tuple

    def __post_init__(self):
        lo = tuple(float(x) for x in np.atleast_1d(self.lo))
        hi = tuple(float(x) for x in np.atleast_1d(self.hi))
        if len(lo) == 0 or len(lo) != len(hi):
            raise InvalidCover(f"domain bounds must be nonempty and of equal length: {lo} {hi}")
        if not all(a < b for a, b in zip(lo, hi)):
            raise InvalidCover(f"domain needs lo < hi on every axis: {lo} {hi}")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def dimension(self) -> int:
        return len(self.lo)

    def widths(self, depth: int) -> np.ndarray:
        return (np.asarray(self.hi) - np.asarray(self.lo)) / float(2**depth)

    def max_depth(self) -> int:
        """Largest depth whose keys still fit in an int64."""
        return min(DEFAULT_MAX_DEPTH, 62 // self.dimension)


@dataclass(frozen=True)
class Box:
    domain: WorkingDomain
    depth: int
    coords: tuple

    def __post_init__(self):
        coords = tuple(int(c) for c in np.atleast_1d(self.coords))
        if len(coords) != self.domain.dimension:
            raise InvalidCover("box coordinates do not match the domain dimension")
        if self.depth < 0 or not all(0 <= c < 2**self.depth for c in coords):
            raise InvalidCover(f"box coordinates {coords} out of range at depth {self.depth}")
        object.__setattr__(self, "coords", coords)

    @property
    def lo(self) -> np.ndarray:
        w = self.domain.widths(self.depth)
        return np.asarray(self.domain.lo) + np.asarray(self.coords) * w

    @property
    def hi(self) -> np.ndarray:
        w = self.domain.widths(self.depth)
        return np.asarray(self.domain.lo) + (np.asarray(self.coords) + 1) * w


def encode(coords: np.ndarray, depth: int) -> np.ndarray:
    coords = np.asarray(coords, dtype=np.int64)
    keys = np.zeros(coords.shape[0], dtype=np.int64)
    for a in range(coords.shape[1]):
        keys = (keys << depth) | coords[:, a]
    return keys


def decode(keys: np.ndarray, depth: int, dim: int) -> np.ndarray:
    keys = np.asarray(keys, dtype=np.int64)
    out = np.empty((keys.shape[0], dim), dtype=np.int64)
    mask = (np.int64(1) << depth) - 1
    for a in range(dim - 1, -1, -1):
        out[:, a] = keys & mask
        keys = keys >> depth
    return out


class BoxCover:
    """Nonempty, sorted, duplicate-free set of same-depth grid boxes."""

    __slots__ = ("domain", "depth", "keys", "_coords")

    def __init__(self, domain: WorkingDomain, depth: int, coords):
        depth = int(depth)
        if depth < 0 or depth > domain.max_depth():
            raise InvalidCover(f"depth {depth} outside [0, {domain.max_depth()}]")
        coords = np.asarray(coords, dtype=np.int64)
        if coords.ndim == 1:
            coords = coords.reshape(-1, 1) if domain.dimension == 1 else coords.reshape(1, -1)
        if coords.size == 0:
            raise InvalidCover("covers must be nonempty")
        if coords.shape[1] != domain.dimension:
            raise InvalidCover("coordinate width does not match the domain dimension")
        if coords.min() < 0 or coords.max() >= 2**depth:
            raise InvalidCover(f"coordinates out of range at depth {depth}")
        self._init(domain, depth, np.unique(encode(coords, depth)))

    def _init(self, domain, depth, keys):
        keys.setflags(write=False)
        self.domain = domain
        self.depth = depth
        self.keys = keys
        self._coords = None

    @classmethod
    def from_keys(cls, domain: WorkingDomain, depth: int, keys) -> BoxCover:
        """Build from grid keys; ``keys`` must already be sorted and unique."""
        keys = np.ascontiguousarray(keys, dtype=np.int64)
        if keys.size == 0:
            raise InvalidCover("covers must be nonempty")
        obj = cls.__new__(cls)
        obj._init(domain, int(depth), keys)
        return obj

    @classmethod
    def full(cls, domain: WorkingDomain, depth: int) -> BoxCover:
        n = 2 ** (depth * domain.dimension)
        return cls.from_keys(domain, depth, np.arange(n, dtype=np.int64))

    @classmethod
    def from_box(cls, box: Box) -> BoxCover:
        return cls(box.domain, box.depth, [box.coords])

    @property
    def coords(self) -> np.ndarray:
        if self._coords is None:
            c = decode(self.keys, self.depth, self.domain.dimension)
            c.setflags(write=False)
            self._coords = c
        return self._coords

    @property
    def dimension(self) -> int:
        return self.domain.dimension

    @property
    def widths(self) -> np.ndarray:
        return self.domain.widths(self.depth)

    @property
    def lo(self) -> np.ndarray:
        return np.asarray(self.domain.lo) + self.coords * self.widths

    @property
    def hi(self) -> np.ndarray:
        return np.asarray(self.domain.lo) + (self.coords + 1) * self.widths

    def hull(self) -> tuple[np.ndarray, np.ndarray]:
        """Bounding box of the realized union."""
        return self.lo.min(axis=0), self.hi.max(axis=0)

    def boxes(self):
        for c in self.coords:
            yield Box(self.domain, self.depth, tuple(c))

    def __len__(self):
        return int(self.keys.shape[0])

    def __eq__(self, other):
        if not isinstance(other, BoxCover):
            return NotImplemented
        return (
            self.domain == other.domain
            and self.depth == other.depth
            and np.array_equal(self.keys, other.keys)
        )

    def __hash__(self):
        return hash((self.domain, self.depth, self.keys.tobytes()))

    def __repr__(self):
        lo, hi = self.hull()
        return f"BoxCover(depth={self.depth}, n={len(self)}, hull={lo.tolist()}..{hi.tolist()})"


# ------------------------------------------------------------------ helpers


def _check_domain(a: BoxCover, b: BoxCover):
    if a.domain != b.domain:
        raise DomainMismatch(f"covers live on different domains: {a.domain} vs {b.domain}")


def _check_depth(a: BoxCover, b: BoxCover):
    _check_domain(a, b)
    if a.depth != b.depth:
        raise DepthMismatch(f"depth {a.depth} != {b.depth}")


def expand_ranges(starts: np.ndarray, stops: np.ndarray) -> np.ndarray:
    """Concatenate ``arange(s, t)`` for every pair, vectorized."""
    lengths = np.maximum(stops - starts, 0)
    total = int(lengths.sum())
    if total == 0:
        return np.empty(0, dtype=np.int64)
    offsets = np.repeat(starts - np.concatenate(([0], np.cumsum(lengths)[:-1])), lengths)
    return np.arange(total, dtype=np.int64) + offsets


def cells_in_boxes(kmin: np.ndarray, kmax: np.ndarray, depth: int) -> np.ndarray:
    """Sorted unique grid keys of the union of coordinate boxes (inclusive)."""
    kmin = np.ascontiguousarray(kmin, dtype=np.int64)
    kmax = np.ascontiguousarray(kmax, dtype=np.int64)
    ok = np.all(kmax >= kmin, axis=1)
    if not ok.any():
        return np.empty(0, dtype=np.int64)
    _, klo, khi = piece_key_ranges(kmin[ok], kmax[ok], depth)
    n_grid = 1 << (depth * kmin.shape[1])
    if n_grid <= (1 << 24):
        diff = np.bincount(klo, minlength=n_grid + 1) - np.bincount(khi, minlength=n_grid + 1)
        return np.flatnonzero(np.cumsum(diff[:-1]) > 0).astype(np.int64)
    return np.unique(expand_ranges(klo, khi))


def snap(lo: np.ndarray, hi: np.ndarray, domain: WorkingDomain, depth: int, closed: bool = True):
    """Per-axis inclusive coordinate ranges of the boxes meeting ``[lo, hi]``.

    ``closed=True`` counts boxes that only share a face with the set (the
    outer test used for transitions); ``closed=False`` keeps boxes whose
    interior meets the set, which is the minimal cover of it.
    """
    n_cells = 2**depth
    w = domain.widths(depth)
    dlo = np.asarray(domain.lo)
    t_lo = (np.asarray(lo, dtype=float) - dlo) / w
    t_hi = (np.asarray(hi, dtype=float) - dlo) / w
    if closed:
        kmin = np.ceil(t_lo) - 1
        kmax = np.floor(t_hi)
    else:
        kmin = np.floor(t_lo)
        kmax = np.ceil(t_hi) - 1
        thin = kmax < kmin
        if thin.any():
            kmin = np.where(thin, np.ceil(t_lo) - 1, kmin)
            kmax = np.where(thin, np.floor(t_hi), kmax)
    kmin = np.clip(kmin, 0, n_cells - 1).astype(np.int64)
    kmax = np.clip(kmax, 0, n_cells - 1).astype(np.int64)
    return kmin, kmax


def merged_intervals(cover: BoxCover) -> tuple[np.ndarray, np.ndarray]:
    """Disjoint sorted intervals making up a 1-D cover's union."""
    lo = cover.lo[:, 0]
    hi = cover.hi[:, 0]
    return _merge(lo, hi)


def _merge(lo, hi):
    runmax = np.maximum.accumulate(hi)
    starts = np.concatenate(([True], lo[1:] > runmax[:-1]))
    idx = np.flatnonzero(starts)
    ends = np.concatenate((idx[1:] - 1, [lo.shape[0] - 1]))
    return lo[idx], runmax[ends]


# --------------------------------------------------------------- operations


def subdivide(cover: BoxCover, max_depth: int | None = None) -> BoxCover:
    """Split every box into its 2**dim children."""
    limit = cover.domain.max_depth() if max_depth is None else min(max_depth, cover.domain.max_depth())
    if cover.depth + 1 > limit:
        raise RefinementLimit(f"cannot subdivide beyond depth {limit}")
    d = cover.dimension
    offsets = np.array(np.meshgrid(*([[0, 1]] * d), indexing="ij")).reshape(d, -1).T
    children = (2 * cover.coords[:, None, :] + offsets[None, :, :]).reshape(-1, d)
    keys = encode(children, cover.depth + 1)
    if d > 1:
        keys = np.sort(keys)
    return BoxCover.from_keys(cover.domain, cover.depth + 1, keys)


def coarsen(cover: BoxCover, depth: int) -> BoxCover:
    """Parent cover at a shallower depth."""
    if depth > cover.depth:
        raise DepthMismatch("coarsen needs a shallower depth")
    shift = cover.depth - depth
    return BoxCover(cover.domain, depth, cover.coords >> shift)


def refine_to(cover: BoxCover, depth: int) -> BoxCover:
    while cover.depth < depth:
        cover = subdivide(cover)
    return cover


def semi_dist(a: BoxCover, b: BoxCover) -> float:
    """sup over x in a of the sup-metric distance from x to b."""
    _check_domain(a, b)
    if a.dimension == 1:
        return _semi_dist_1d(*merged_intervals(a), *merged_intervals(b))
    return _semi_dist_nd(a.lo, a.hi, b.lo, b.hi)


def hausdorff_dist(a: BoxCover, b: BoxCover) -> float:
    return max(semi_dist(a, b), semi_dist(b, a))


def _semi_dist_1d(alo, ahi, blo, bhi) -> float:
    # gaps of b, including the two unbounded ones
    g0 = np.concatenate(([-np.inf], bhi))
    g1 = np.concatenate((blo, [np.inf]))
    i0 = np.searchsorted(ahi, g0, side="right")
    i1 = np.searchsorted(alo, g1, side="left")
    counts = np.maximum(i1 - i0, 0)
    if counts.sum() == 0:
        return 0.0
    gap = np.repeat(np.arange(g0.shape[0]), counts)
    ai = expand_ranges(i0, i1)
    s0 = np.maximum(alo[ai], g0[gap])
    s1 = np.minimum(ahi[ai], g1[gap])
    mid = np.where(
        np.isinf(g0[gap]), -np.inf, np.where(np.isinf(g1[gap]), np.inf, 0.5 * (g0[gap] + g1[gap]))
    )
    best = 0.0
    for x in (s0, s1, np.clip(mid, s0, s1)):
        d = np.minimum(x - g0[gap], g1[gap] - x)
        best = max(best, float(d.max()))
    return best


def _union_contains(alo, ahi, blo, bhi) -> bool:
    """Whether the union of boxes a lies inside the union of boxes b."""
    d = alo.shape[1]
    axes = [np.unique(np.concatenate((alo[:, i], ahi[:, i], blo[:, i], bhi[:, i]))) for i in range(d)]
    covered = np.zeros(tuple(len(ax) - 1 for ax in axes), dtype=bool)

    def _slices(lo, hi):
        return tuple(
            slice(np.searchsorted(axes[i], lo[i]), np.searchsorted(axes[i], hi[i])) for i in range(d)
        )

    for lo, hi in zip(blo, bhi):
        covered[_slices(lo, hi)] = True
    return all(covered[_slices(lo, hi)].all() for lo, hi in zip(alo, ahi))


def _semi_dist_nd(alo, ahi, blo, bhi) -> float:
    # The supremum is attained where one axis pins it: either a face of a
    # against a face of b, or the midpoint between two faces of b.
    if _union_contains(alo, ahi, blo, bhi):
        return 0.0
    cands = []
    for i in range(alo.shape[1]):
        af = np.unique(np.concatenate((alo[:, i], ahi[:, i])))
        bf = np.unique(np.concatenate((blo[:, i], bhi[:, i])))
        cands.append(np.abs(af[:, None] - bf[None, :]).ravel())
        cands.append((np.abs(bf[:, None] - bf[None, :]) / 2).ravel())
    cands = np.unique(np.concatenate(cands))
    cands = cands[cands > 0]
    lo_i, hi_i = 0, len(cands) - 1
    while lo_i < hi_i:
        mid = (lo_i + hi_i) // 2
        r = cands[mid]
        if _union_contains(alo, ahi, blo - r, bhi + r):
            hi_i = mid
        else:
            lo_i = mid + 1
    return float(cands[lo_i])


def gap_dist(a: BoxCover, b: BoxCover) -> float:
    """Smallest sup-metric distance between the two unions (0 if they touch)."""
    _check_domain(a, b)
    if a.dimension == 1:
        alo, ahi = merged_intervals(a)
        blo, bhi = merged_intervals(b)
        # for each a-interval the nearest b-intervals sit on either side
        j = np.searchsorted(blo, alo, side="right")
        left = np.where(j > 0, alo - bhi[np.maximum(j - 1, 0)], np.inf)
        right = np.where(j < len(blo), blo[np.minimum(j, len(blo) - 1)] - ahi, np.inf)
        return float(max(0.0, min(np.maximum(left, 0).min(), np.maximum(right, 0).min())))
    best = np.inf
    blo, bhi = b.lo, b.hi
    for lo, hi in zip(a.lo, a.hi):
        gaps = np.maximum(np.maximum(blo - hi, lo - bhi), 0.0).max(axis=1)
        best = min(best, float(gaps.min()))
    return best


def inflate(cover: BoxCover, radius: float, metric: str = "sup") -> BoxCover:
    """Minimal same-depth cover of the closed radius-neighbourhood, clipped to the domain."""
    if not radius > 0:
        raise ValueError("radius must be positive")
    dom = cover.domain
    lo = np.maximum(cover.lo - radius, dom.lo)
    hi = np.minimum(cover.hi + radius, dom.hi)
    kmin, kmax = snap(lo, hi, dom, cover.depth, closed=False)
    keys = cells_in_boxes(kmin, kmax, cover.depth)
    if metric == "sup" or cover.dimension == 1:
        return BoxCover.from_keys(dom, cover.depth, keys)
    if metric != "euclidean":
        raise ValueError(f"unknown metric {metric!r}")
    cand = BoxCover.from_keys(dom, cover.depth, keys)
    clo, chi = cand.lo, cand.hi
    keep = np.zeros(len(cand), dtype=bool)
    for lo_b, hi_b in zip(cover.lo, cover.hi):
        gaps = np.maximum(np.maximum(clo - hi_b, lo_b - chi), 0.0)
        keep |= np.sqrt((gaps**2).sum(axis=1)) < radius
    return BoxCover.from_keys(dom, cover.depth, keys[keep])


def ring(cover: BoxCover) -> BoxCover:
    """The cover plus one layer of neighbouring boxes (face and corner)."""
    return inflate(cover, 0.5 * float(cover.widths.min()))


def overlap(a: BoxCover, b: BoxCover):
    """Boxes present in both covers, or an :class:`EmptySet` marker."""
    _check_depth(a, b)
    keys = np.intersect1d(a.keys, b.keys, assume_unique=True)
    if keys.size == 0:
        return EmptySet("disjoint")
    return BoxCover.from_keys(a.domain, a.depth, keys)


def union(a: BoxCover, b: BoxCover) -> BoxCover:
    _check_depth(a, b)
    return BoxCover.from_keys(a.domain, a.depth, np.union1d(a.keys, b.keys))


def difference(a: BoxCover, b: BoxCover):
    _check_depth(a, b)
    keys = np.setdiff1d(a.keys, b.keys, assume_unique=True)
    if keys.size == 0:
        return EmptySet("difference is empty")
    return BoxCover.from_keys(a.domain, a.depth, keys)


def contains(a: BoxCover, b: BoxCover) -> bool:
    """Whether cover ``a`` contains every box of ``b`` (same depth)."""
    _check_depth(a, b)
    return bool(np.isin(b.keys, a.keys, assume_unique=True).all())


def box_width(cover: BoxCover) -> float:
    """Largest box side length (the sup-metric box diameter)."""
    return float(cover.widths.max())
