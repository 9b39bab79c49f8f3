import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from setdyn import make_model
from setdyn.continuation import (
    KINDS,
    Sample,
    Thresholds,
    bracket_bifurcation,
    classify_transition,
    dual_gap,
    sweep,
)
from setdyn.errors import GLOBALLY_ATTRACTIVE, DepthMismatch, EventLost
from setdyn.geometry import WorkingDomain, inflate, overlap, semi_dist
from setdyn.errors import EmptySet
from setdyn.minimal import refine_minimal_sets

DOM = WorkingDomain((-4.0,), (4.0,))
ALPHA_STAR = 1.1 + 2 * math.sqrt(0.1)
BETA_STAR = -(3 - 2 * math.sqrt(2)) + 0.1


def sample(svm, value, depth, side="forward"):
    return Sample(value, depth, side, refine_minimal_sets(svm, DOM, depth, side=side))


@pytest.fixture(scope="module")
def alpha_sweep():
    fam = make_model("saturating", alpha=1.6, beta=0.0, eps=0.1)
    grid = np.round(np.arange(1.6, 1.9001, 0.01), 10)
    return sweep(fam, "alpha", grid, DOM, 10)


@pytest.fixture(scope="module")
def lam_sweep():
    fam = make_model("merging", lam=0.0)
    return sweep(fam, "lam", np.round(np.arange(0, 1.0001, 0.05), 10), DOM, 8)


def test_oracle_values():
    assert ALPHA_STAR == pytest.approx(1.732456, abs=1e-6)
    assert BETA_STAR == pytest.approx(-0.071573, abs=1e-6)


def test_alpha_sweep_counts(alpha_sweep):
    for a, n in alpha_sweep.counts():
        assert n == (1 if a < ALPHA_STAR else 2), a


def test_alpha_sweep_single_explosion(alpha_sweep):
    (e,) = alpha_sweep.transitions()
    assert e.kind == "explosion"
    assert e.param_lo < ALPHA_STAR < e.param_hi
    assert e.lineages_lo == (0,) and e.lineages_hi == (0, 1)
    assert e.evidence["grows_toward"] == "lo"


def test_merge_candidate_only_at_zero(lam_sweep):
    kinds = [(e.kind, e.param_lo) for e in lam_sweep.transitions()]
    assert kinds == [("merge_candidate", 0.0)]
    gaps = []
    for s in lam_sweep.samples[1:]:
        a, b = s.covers
        gaps.append(semi_dist(a, b))
    assert gaps == sorted(gaps)


def test_continuous_model_never_merges():
    fam = make_model("saturating", alpha=2.0, beta=0.0, eps=0.1)
    rep = sweep(fam, "beta", np.linspace(-0.06, 0.06, 13), DOM, 9)
    assert all(e.kind != "merge_candidate" for e in rep.events)
    fam = make_model("contraction", L=0.5, eps=0.1)
    rep = sweep(fam, "L", np.linspace(0.1, 0.5, 21), DOM, 8)
    assert all(e.kind == "continuous" and e.evidence["resolved"] for e in rep.events)


def test_one_point_grid():
    fam = make_model("merging", lam=0.5)
    rep = sweep(fam, "lam", [0.5], DOM, 6)
    assert rep.events == [] and rep.transitions() == []
    assert rep.counts() == [(0.5, 2)]


def test_bad_grids():
    fam = make_model("merging", lam=0.5)
    with pytest.raises(ValueError):
        sweep(fam, "lam", [], DOM, 6)
    with pytest.raises(ValueError):
        sweep(fam, "lam", [0.5, 0.5], DOM, 6)


def test_failed_points_are_recorded():
    fam = make_model("saturating", alpha=2.0, beta=0.0, eps=0.1)
    dom = WorkingDomain((-2.5,), (2.5,))
    rep = sweep(fam, "alpha", [2.0, 2.2, 4.0, 4.5], dom, 7)
    assert [p for p, _ in rep.failures] == [4.0, 4.5]
    assert "NotAbsorbing" in rep.failures[0][1]
    assert [s.param for s in rep.samples] == [2.0, 2.2]


# ------------------------------------------------------------ classification


def test_identical_samples_continuous():
    s = sample(make_model("saturating", alpha=2.0, beta=0.0, eps=0.1), 2.0, 9)
    events = classify_transition(s, s)
    assert [e.kind for e in events] == ["continuous", "continuous"]
    assert all(e.evidence["hausdorff_boxes"] == 0 for e in events)
    assert [e.lineages_lo for e in events] == [(0,), (1,)]


def test_depth_mismatch():
    fam = make_model("saturating", alpha=2.0, beta=0.0, eps=0.1)
    with pytest.raises(DepthMismatch):
        classify_transition(sample(fam, 2.0, 8), sample(fam, 2.0, 9))


def test_explosion_example():
    fam = make_model("saturating", alpha=2.0, beta=0.0, eps=0.1)
    hi = sample(fam.with_params(alpha=1.74), 1.74, 10)
    lo = sample(fam.with_params(alpha=1.73), 1.73, 10)
    (e,) = classify_transition(lo, hi)
    assert e.kind == "explosion" and e.lineages_hi == (0, 1)
    assert e.evidence["grows_toward"] == "lo"
    assert e.evidence["semi_hi_to_lo"] <= 2
    # read backwards the single set is larger on the upper side
    (r,) = classify_transition(hi, lo)
    assert r.kind == "explosion" and r.evidence["grows_toward"] == "hi"


def test_drift_beyond_one_sided_slack_is_unresolved():
    fam = make_model("saturating", alpha=2.0, beta=0.0, eps=0.1)
    lo = sample(fam.with_params(alpha=1.72), 1.72, 10)
    hi = sample(fam.with_params(alpha=1.74), 1.74, 10)
    (e,) = classify_transition(lo, hi)
    assert e.kind == "continuous" and e.evidence["resolved"] is False
    assert e.evidence["semi_hi_to_lo"] > 2


def test_appearance_example():
    fam = make_model("saturating", alpha=2.0, beta=-0.08, eps=0.1)
    a = sample(fam, -0.08, 10)
    b = sample(fam.with_params(beta=-0.06), -0.06, 10)
    kinds = sorted(e.kind for e in classify_transition(a, b))
    assert kinds == ["appearance", "continuous"]
    kinds = sorted(e.kind for e in classify_transition(b, a))
    assert kinds == ["continuous", "disappearance"]


def _fam_samples(draw):
    which = draw(st.sampled_from(["sat_alpha", "sat_beta", "merge"]))
    if which == "sat_alpha":
        fam, name, lo, hi = make_model("saturating", alpha=2, beta=0, eps=0.1), "alpha", 1.5, 2.2
    elif which == "sat_beta":
        fam, name, lo, hi = make_model("saturating", alpha=2, beta=0, eps=0.1), "beta", -0.15, 0.15
    else:
        fam, name, lo, hi = make_model("merging", lam=0.5), "lam", 0.0, 1.0
    x = draw(st.floats(lo, hi))
    y = draw(st.floats(lo, hi))
    depth = draw(st.sampled_from([7, 8, 9]))
    a = Sample(x, depth, "forward", refine_minimal_sets(fam.with_params(**{name: x}), DOM, depth))
    b = Sample(y, depth, "forward", refine_minimal_sets(fam.with_params(**{name: y}), DOM, depth))
    return a, b


@settings(max_examples=40)
@given(st.data())
def test_classification_exhaustive(data):
    a, b = _fam_samples(data.draw)
    events = classify_transition(a, b)
    lo = sorted(i for e in events for i in e.lineages_lo)
    hi = sorted(j for e in events for j in e.lineages_hi)
    assert lo == list(range(len(a.sets)))
    assert hi == list(range(len(b.sets)))
    assert all(e.kind in KINDS for e in events)


@settings(max_examples=40)
@given(st.data())
def test_explosion_one_sided(data):
    a, b = _fam_samples(data.draw)
    thr = Thresholds()
    for e in classify_transition(a, b, thr):
        if e.kind != "explosion":
            continue
        w = e.evidence["box_width"]
        old = [a.covers[i] for i in e.lineages_lo]
        new = [b.covers[j] for j in e.lineages_hi]
        small, big = (old, new) if e.evidence["grows_toward"] == "hi" else (new, old)
        assert max(min(semi_dist(s, t) for t in big) for s in small) <= 2 * w
        assert e.evidence["hausdorff_boxes"] > thr.explosion


@settings(max_examples=40)
@given(st.data())
def test_appearance_isolated(data):
    a, b = _fam_samples(data.draw)
    thr = Thresholds()
    for e in classify_transition(a, b, thr):
        w = e.evidence["box_width"]
        if e.kind == "appearance":
            (j,) = e.lineages_hi
            for c in a.covers:
                assert isinstance(overlap(inflate(c, thr.delta * w), b.covers[j]), EmptySet)
        if e.kind == "disappearance":
            (i,) = e.lineages_lo
            for c in b.covers:
                assert isinstance(overlap(inflate(c, thr.delta * w), a.covers[i]), EmptySet)


# --------------------------------------------------------------- bracketing


def test_bracket_requires_interval():
    fam = make_model("saturating", alpha=2.0, beta=0.0, eps=0.1)
    with pytest.raises(ValueError):
        bracket_bifurcation(fam, "alpha", 1.7, 1.7, "explosion", DOM, 1e-3)
    with pytest.raises(ValueError):
        bracket_bifurcation(fam, "alpha", 1.6, 1.9, "continuous", DOM, 1e-3)


def test_bracket_without_event():
    fam = make_model("saturating", alpha=2.0, beta=0.0, eps=0.1)
    with pytest.raises(EventLost) as info:
        bracket_bifurcation(fam, "alpha", 1.8, 1.9, "explosion", DOM, 1e-3, start_depth=8)
    assert list(info.value.brackets) == [(1.8, 1.9)]


def test_bracket_history_nested():
    fam = make_model("saturating", alpha=2.0, beta=0.0, eps=0.1)
    br = bracket_bifurcation(fam, "beta", -0.2, 0.1, "appearance", DOM, 1e-2, start_depth=9)
    assert br.lo <= BETA_STAR <= br.hi and br.width <= 1e-2
    for (a, b, _), (c, d, _) in zip(br.history, br.history[1:]):
        assert a <= c < d <= b
        assert d - c == pytest.approx((b - a) / 2)


# ------------------------------------------------------------------ dual gap


def test_dual_gap_contraction():
    fam = make_model("contraction", L=0.5, eps=0.1)
    (m,) = refine_minimal_sets(fam, DOM, 8)
    assert dual_gap(fam, m) is GLOBALLY_ATTRACTIVE


def test_dual_gap_positive_above():
    fam = make_model("saturating", alpha=1.9, beta=0.0, eps=0.1)
    a1, a2 = refine_minimal_sets(fam, DOM, 10)
    g = dual_gap(fam, a2)
    # A2's left end minus R's right end, from the quadratic oracles
    left = (0.8 + math.sqrt(0.8**2 - 0.4)) / 2
    r = (0.8 - math.sqrt(0.8**2 - 0.4)) / 2
    assert g > 0
    assert abs(g - (left - r)) <= 3 * a2.width
