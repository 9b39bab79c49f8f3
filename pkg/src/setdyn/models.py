"""Parameterized set-valued maps with outer image enclosures.

Every map evaluates ``enclose_many(lo, hi)`` on a batch of boxes and returns
image pieces ``(owner, piece_lo, piece_hi)``.  Pieces are padded outward by a
few ulps so floating-point rounding never shrinks an image.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InsufficientEvidence, NotAbsorbing, UnsupportedParameter
from .geometry import Box, WorkingDomain

_EPS = np.finfo(float).eps


def _pad(lo, hi, scale):
    p = 8 * _EPS * scale
    return lo - p, hi + p


@dataclass(frozen=True)
class ImageEnclosure:
    """Outer bound of the image of one box: a tuple of (lo, hi) interval vectors."""

    intervals: tuple

    @property
    def hull(self):
        lo = np.min([np.asarray(a) for a, _ in self.intervals], axis=0)
        hi = np.max([np.asarray(b) for _, b in self.intervals], axis=0)
        return lo, hi

    def contains(self, point, tol=0.0) -> bool:
        x = np.atleast_1d(np.asarray(point, dtype=float))
        return any(
            np.all(np.asarray(a) - tol <= x) and np.all(x <= np.asarray(b) + tol)
            for a, b in self.intervals
        )


@dataclass(frozen=True)
class ContractionCertificate:
    certified: bool
    factor: float
    estimated: bool = False


class SetValuedMap:
    """Base class: x -> closed ball around f(x), possibly piecewise."""

    name = "abstract"
    dimension = 1
    continuity_class = "continuous"
    param_names: tuple = ()

    def __init__(self, **params):
        unknown = set(params) - set(self.param_names)
        if unknown:
            raise UnsupportedParameter(f"{self.name}: unknown parameters {sorted(unknown)}")
        missing = set(self.param_names) - set(params)
        if missing:
            raise UnsupportedParameter(f"{self.name}: missing parameters {sorted(missing)}")
        self.params = {k: float(params[k]) for k in self.param_names}
        self._validate()

    def _validate(self):
        pass

    def with_params(self, **changes) -> SetValuedMap:
        merged = dict(self.params)
        merged.update(changes)
        return type(self)(**merged)

    def __repr__(self):
        args = ", ".join(f"{k}={v!r}" for k, v in self.params.items())
        return f"{type(self).__name__}({args})"

    def __eq__(self, other):
        return type(self) is type(other) and self.params == other.params

    def __hash__(self):
        return hash((type(self).__name__, tuple(sorted(self.params.items()))))

    # -- contract -------------------------------------------------------
    def enclose_many(self, lo, hi):
        raise NotImplementedError

    def point_image(self, x):
        """Exact image of a single point as a list of (lo, hi) pieces."""
        raise NotImplementedError

    @property
    def ball_radius_guarantee(self):
        return None

    @property
    def lipschitz(self):
        """Declared (L for f, M for the inflation) or None."""
        return None

    # -- conveniences ---------------------------------------------------
    def enclose(self, box, domain: WorkingDomain | None = None) -> ImageEnclosure:
        """Enclosure of one box; ``box`` is a :class:`Box` or a ``(lo, hi)`` pair.

        Thin boxes (lo == hi) give point images.  With ``domain`` the pieces
        are clipped to it.
        """
        if isinstance(box, Box):
            lo, hi = box.lo, box.hi
        else:
            lo, hi = box
        lo = np.atleast_1d(np.asarray(lo, dtype=float)).reshape(1, -1)
        hi = np.atleast_1d(np.asarray(hi, dtype=float)).reshape(1, -1)
        _, plo, phi = self.enclose_many(lo, hi)
        if domain is not None:
            plo = np.clip(plo, domain.lo, domain.hi)
            phi = np.clip(phi, domain.lo, domain.hi)
        if self.dimension == 1:
            order = np.argsort(plo[:, 0], kind="stable")
            pieces = []
            for a, b in zip(plo[order, 0], phi[order, 0]):
                if pieces and a <= pieces[-1][1]:
                    pieces[-1][1] = max(pieces[-1][1], b)
                else:
                    pieces.append([a, b])
            intervals = tuple(((float(a),), (float(b),)) for a, b in pieces)
        else:
            intervals = tuple((tuple(map(float, a)), tuple(map(float, b))) for a, b in zip(plo, phi))
        return ImageEnclosure(intervals)


class SaturatingMap(SetValuedMap):
    """x -> [f(x) - eps, f(x) + eps] with f(x) = alpha x / (1 + |x|) + beta."""

    name = "saturating"
    param_names = ("alpha", "beta", "eps")

    def _validate(self):
        if self.params["alpha"] <= 0:
            raise UnsupportedParameter("saturating map needs alpha > 0")
        if self.params["eps"] <= 0:
            raise UnsupportedParameter("saturating map needs eps > 0")

    def f(self, x):
        a, b = self.params["alpha"], self.params["beta"]
        x = np.asarray(x, dtype=float)
        return a * x / (1.0 + np.abs(x)) + b

    def enclose_many(self, lo, hi):
        a, b, e = self.params["alpha"], self.params["beta"], self.params["eps"]
        # f is increasing on all of R when alpha > 0 (continuous at 0,
        # increasing on each sign piece), so endpoints suffice
        plo = self.f(lo[:, 0]) - e
        phi = self.f(hi[:, 0]) + e
        plo, phi = _pad(plo, phi, a + abs(b) + e)
        owner = np.arange(lo.shape[0], dtype=np.int64)
        return owner, plo[:, None], phi[:, None]

    def point_image(self, x):
        a, b, e = self.params["alpha"], self.params["beta"], self.params["eps"]
        y = a * x / (1 + abs(x)) + b
        return [(y - e, y + e)]

    @property
    def ball_radius_guarantee(self):
        return (1, self.params["eps"])

    @property
    def lipschitz(self):
        # sup |f'| = alpha, attained at x = 0
        return (self.params["alpha"], 1.0)

    def absorbing_radius(self) -> float:
        p = self.params
        return p["alpha"] + abs(p["beta"]) + p["eps"]


class MergingMap(SetValuedMap):
    """Upper semi-continuous map whose two minimal sets collide as lam -> 0."""

    name = "merging"
    param_names = ("lam",)
    continuity_class = "upper_semicontinuous"

    def enclose_many(self, lo, hi):
        lam = self.params["lam"]
        l = lo[:, 0]
        h = hi[:, 0]
        n = l.shape[0]
        owners, plos, phis = [], [], []
        idx = np.arange(n, dtype=np.int64)
        neg = l < 0
        if neg.any():
            # closure of the x < 0 branch over [l, min(h, 0))
            top = np.minimum(h[neg], 0.0)
            owners.append(idx[neg])
            plos.append(l[neg] / 2 - lam - 1)
            phis.append(top / 2 - lam)
        pos = h > 0
        if pos.any():
            bot = np.maximum(l[pos], 0.0)
            owners.append(idx[pos])
            plos.append(bot / 2 + lam)
            phis.append(h[pos] / 2 + lam + 1)
        zero = (l <= 0) & (h >= 0)
        if zero.any():
            owners.append(idx[zero])
            plos.append(np.full(int(zero.sum()), -2.0))
            phis.append(np.full(int(zero.sum()), 2.0))
        owner = np.concatenate(owners)
        plo = np.concatenate(plos)
        phi = np.concatenate(phis)
        scale = np.maximum(np.abs(plo), np.abs(phi)) + abs(lam) + 1
        plo, phi = _pad(plo, phi, scale)
        order = np.argsort(owner, kind="stable")
        return owner[order], plo[order, None], phi[order, None]

    def point_image(self, x):
        lam = self.params["lam"]
        if x < 0:
            return [(x / 2 - lam - 1, x / 2 - lam)]
        if x > 0:
            return [(x / 2 + lam, x / 2 + lam + 1)]
        return [(-2.0, 2.0)]

    @property
    def ball_radius_guarantee(self):
        return (1, 0.5)


class ContractionMap(SetValuedMap):
    """x -> [L x - eps, L x + eps]."""

    name = "contraction"
    param_names = ("L", "eps")

    def _validate(self):
        if self.params["eps"] <= 0:
            raise UnsupportedParameter("contraction map needs eps > 0")

    def enclose_many(self, lo, hi):
        L, e = self.params["L"], self.params["eps"]
        a = L * lo[:, 0]
        b = L * hi[:, 0]
        plo = np.minimum(a, b) - e
        phi = np.maximum(a, b) + e
        scale = abs(L) * np.maximum(np.abs(lo[:, 0]), np.abs(hi[:, 0])) + e
        plo, phi = _pad(plo, phi, scale)
        owner = np.arange(lo.shape[0], dtype=np.int64)
        return owner, plo[:, None], phi[:, None]

    def point_image(self, x):
        L, e = self.params["L"], self.params["eps"]
        return [(L * x - e, L * x + e)]

    @property
    def ball_radius_guarantee(self):
        return (1, self.params["eps"])

    @property
    def lipschitz(self):
        return (abs(self.params["L"]), 1.0)


class PiecewiseAffineMap(SetValuedMap):
    """User map: on each guard box x -> closed sup-ball of radius r around A x + b."""

    name = "piecewise"

    def __init__(self, pieces, continuity_class="upper_semicontinuous"):
        if not pieces:
            raise UnsupportedParameter("piecewise map needs at least one piece")
        self.pieces = []
        for p in pieces:
            glo = np.atleast_1d(np.asarray(p["guard_lo"], dtype=float))
            ghi = np.atleast_1d(np.asarray(p["guard_hi"], dtype=float))
            A = np.atleast_2d(np.asarray(p["A"], dtype=float))
            b = np.atleast_1d(np.asarray(p["b"], dtype=float))
            r = float(p["radius"])
            if r < 0 or A.shape != (glo.size, glo.size) or b.size != glo.size:
                raise UnsupportedParameter(f"malformed piece {p}")
            self.pieces.append((glo, ghi, A, b, r))
        self.dimension = self.pieces[0][0].size
        self.continuity_class = continuity_class
        self.params = {}

    @classmethod
    def from_json(cls, source) -> PiecewiseAffineMap:
        """Load ``{"continuity": ..., "pieces": [{"guard": [lo, hi], "coef": [a, b], "radius": r}]}``.

        ``guard`` may also be ``{"lo": [...], "hi": [...]}`` and ``coef`` may be
        given as separate ``"A"``/``"b"`` entries for maps in several dimensions.
        """
        if isinstance(source, (str, Path)) and Path(source).exists():
            data = json.loads(Path(source).read_text())
        elif isinstance(source, str):
            data = json.loads(source)
        else:
            data = source
        pieces = []
        for p in data["pieces"]:
            g = p["guard"]
            if isinstance(g, dict):
                glo, ghi = g["lo"], g["hi"]
            else:
                glo, ghi = [g[0]], [g[1]]
            if "coef" in p:
                A, b = [[p["coef"][0]]], [p["coef"][1]]
            else:
                A, b = p["A"], p["b"]
            pieces.append({"guard_lo": glo, "guard_hi": ghi, "A": A, "b": b, "radius": p["radius"]})
        return cls(pieces, data.get("continuity", "upper_semicontinuous"))

    def with_params(self, **changes):
        if changes:
            raise UnsupportedParameter("piecewise maps have no named parameters")
        return self

    def __repr__(self):
        return f"PiecewiseAffineMap({len(self.pieces)} pieces)"

    def __eq__(self, other):
        return self is other

    __hash__ = object.__hash__

    def enclose_many(self, lo, hi):
        owners, plos, phis = [], [], []
        covered = np.zeros(lo.shape[0], dtype=bool)
        for glo, ghi, A, b, r in self.pieces:
            clo = np.maximum(lo, glo)
            chi = np.minimum(hi, ghi)
            hit = np.all(clo <= chi, axis=1)
            if not hit.any():
                continue
            covered |= hit
            c = 0.5 * (clo[hit] + chi[hit])
            rad = 0.5 * (chi[hit] - clo[hit])
            center = c @ A.T + b
            spread = rad @ np.abs(A).T + r
            scale = np.abs(c) @ np.abs(A).T + np.abs(b) + spread
            plo, phi = _pad(center - spread, center + spread, scale)
            owners.append(np.flatnonzero(hit))
            plos.append(plo)
            phis.append(phi)
        if not covered.all():
            bad = int(np.flatnonzero(~covered)[0])
            raise UnsupportedParameter(f"no guard covers box {lo[bad].tolist()}..{hi[bad].tolist()}")
        owner = np.concatenate(owners)
        order = np.argsort(owner, kind="stable")
        return owner[order], np.concatenate(plos)[order], np.concatenate(phis)[order]

    def point_image(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        out = []
        for glo, ghi, A, b, r in self.pieces:
            if np.all(glo <= x) and np.all(x <= ghi):
                y = A @ x + b
                out.append((y - r, y + r) if self.dimension > 1 else (float(y[0] - r), float(y[0] + r)))
        return out

    @property
    def ball_radius_guarantee(self):
        r = min(p[4] for p in self.pieces)
        return (1, r) if r > 0 else None

    def sample_points(self, n, rng):
        glo = np.min([p[0] for p in self.pieces], axis=0)
        ghi = np.max([p[1] for p in self.pieces], axis=0)
        return rng.uniform(glo, ghi, size=(n, self.dimension))

    def center(self, x):
        for glo, ghi, A, b, _ in self.pieces:
            if np.all(glo <= x) and np.all(x <= ghi):
                return A @ x + b
        return None


MODELS = {
    "saturating": SaturatingMap,
    "merging": MergingMap,
    "contraction": ContractionMap,
}

# accepted spellings on the command line
ALIASES = {"lambda": "lam", "epsilon": "eps", "a": "alpha", "b": "beta"}


def make_model(name: str, **params) -> SetValuedMap:
    try:
        cls = MODELS[name]
    except KeyError:
        raise UnsupportedParameter(f"unknown model {name!r}; choose from {sorted(MODELS)}") from None
    return cls(**{ALIASES.get(k, k): v for k, v in params.items()})


def check_absorbing(svm: SetValuedMap, domain: WorkingDomain, tol: float = 1e-9):
    """Raise NotAbsorbing unless the image of the whole domain stays inside it."""
    lo = np.asarray(domain.lo, dtype=float)[None, :]
    hi = np.asarray(domain.hi, dtype=float)[None, :]
    _, plo, phi = svm.enclose_many(lo, hi)
    slack = tol * (hi - lo)
    if np.any(plo < lo - slack) or np.any(phi > hi + slack):
        raise NotAbsorbing(
            f"{svm!r} maps {domain} outside itself: [{plo.min()}, {phi.max()}]", box=(domain.lo, domain.hi)
        )


def check_contraction_certificate(
    svm: SetValuedMap, samples: int = 256, seed: int = 0
) -> ContractionCertificate:
    """Certified iff L * M < 1 for declared (or, for user maps, sampled) constants."""
    declared = svm.lipschitz
    if declared is not None:
        L, M = declared
        return ContractionCertificate(L * M < 1, L * M, estimated=False)
    if not isinstance(svm, PiecewiseAffineMap):
        # built-ins without declared constants are discontinuous
        return ContractionCertificate(False, math.inf, estimated=False)
    if samples < 2:
        raise InsufficientEvidence("need at least two samples to estimate a Lipschitz constant")
    rng = np.random.default_rng(seed)
    pts = svm.sample_points(2 * samples, rng)
    best = 0.0
    for x, y in zip(pts[:samples], pts[samples:]):
        dx = np.max(np.abs(x - y))
        if dx == 0:
            continue
        best = max(best, float(np.max(np.abs(svm.center(x) - svm.center(y)))) / dx)
    return ContractionCertificate(best < 1, best, estimated=True)
