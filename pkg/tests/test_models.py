import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from setdyn.errors import InsufficientEvidence, NotAbsorbing, UnsupportedParameter
from setdyn.geometry import Box, WorkingDomain
from setdyn.models import (
    ContractionMap,
    MergingMap,
    PiecewiseAffineMap,
    SaturatingMap,
    check_absorbing,
    check_contraction_certificate,
    make_model,
)

DOM = WorkingDomain((-4.0,), (4.0,))
TIGHT = 1e-12


def approx_interval(enc, lo, hi, tol=TIGHT):
    (a,), (b,) = enc.hull
    return abs(a - lo) <= tol and abs(b - hi) <= tol


def pieces(enc):
    return [(a[0], b[0]) for a, b in enc.intervals]


# --------------------------------------------------------------- saturating


def test_saturating_point():
    m = SaturatingMap(alpha=2, beta=0, eps=0.1)
    assert approx_interval(m.enclose((1.0, 1.0)), 0.9, 1.1)


def test_saturating_straddling_box():
    m = SaturatingMap(alpha=2, beta=0, eps=0.1)
    assert approx_interval(m.enclose((-1.0, 1.0)), -1.1, 1.1)


def test_saturating_rejects_nonpositive_alpha():
    with pytest.raises(UnsupportedParameter):
        SaturatingMap(alpha=0.0, beta=0, eps=0.1)
    with pytest.raises(UnsupportedParameter):
        SaturatingMap(alpha=-1.0, beta=0, eps=0.1)


def test_extremal_fixed_points():
    """Stable fixed points of f -/+ eps bound the right attractor."""
    f = lambda x: 2 * x / (1 + abs(x))
    lo = (0.9 + math.sqrt(0.41)) / 2
    hi = (1.1 + math.sqrt(1.61)) / 2
    assert lo == pytest.approx(0.770156, abs=1e-6)
    # root of x^2 - 1.1 x - 0.1 = 0
    assert hi == pytest.approx(1.184429, abs=1e-6)
    assert f(lo) - 0.1 == pytest.approx(lo, abs=1e-12)
    assert f(hi) + 0.1 == pytest.approx(hi, abs=1e-12)


def test_unknown_model_and_alias():
    assert make_model("merging", **{"lambda": 0.5}) == MergingMap(lam=0.5)
    with pytest.raises(UnsupportedParameter):
        make_model("logistic", r=3.0)
    with pytest.raises(UnsupportedParameter):
        make_model("saturating", alpha=2.0, beta=0.0)


# ------------------------------------------------------------------ merging


def test_merging_positive_box():
    assert approx_interval(MergingMap(lam=0.5).enclose((1.0, 2.0)), 1.0, 2.5)


def test_merging_box_around_zero():
    enc = MergingMap(lam=0.0).enclose((-0.1, 0.1))
    assert pieces(enc) == [pytest.approx((-2.0, 2.0), abs=TIGHT)]


def test_merging_two_pieces():
    enc = MergingMap(lam=1.0).enclose((0.5, 1.0))
    assert len(enc.intervals) == 1
    enc = MergingMap(lam=1.0).enclose(Box(DOM, 4, (9,)))  # [0.5, 1.0]
    assert approx_interval(enc, 1.25, 2.5)


def test_merging_upper_semicontinuous_limits():
    m = MergingMap(lam=0.5)
    for k in range(2, 30, 4):
        d = 2.0**-k
        both = m.enclose((-d, d))
        left = m.enclose((-d, -d / 2))
        right = m.enclose((d / 2, d))
        (a,), (b,) = both.hull
        assert a <= -2.0 and b >= 2.0
        assert a >= -2.0 - 2 * d and b <= 2.0 + 2 * d
        # one-sided boxes converge to [-1.5, -0.5] and [0.5, 1.5]
        assert approx_interval(left, -1.5 - d / 2, -0.5 - d / 4, tol=1e-9)
        assert approx_interval(right, 0.5 + d / 4, 1.5 + d / 2, tol=1e-9)
    assert m.continuity_class == "upper_semicontinuous"


# -------------------------------------------------------------- contraction


def test_contraction_thin_box():
    assert approx_interval(ContractionMap(L=0.5, eps=0.1).enclose((0.0, 0.0)), -0.1, 0.1)


def test_contraction_fixed_interval():
    m = ContractionMap(L=0.5, eps=0.1)
    assert approx_interval(m.enclose((-0.2, 0.2)), -0.2, 0.2)


@given(
    st.floats(-3, 3), st.floats(0, 1), st.floats(-3, 3), st.floats(0, 1)
)
def test_contraction_halves_hausdorff(a, wa, b, wb):
    m = ContractionMap(L=0.5, eps=0.1)
    (al,), (ah,) = m.enclose((a, a + wa)).hull
    (bl,), (bh,) = m.enclose((b, b + wb)).hull
    h_in = max(abs(a - b), abs(a + wa - b - wb))
    h_out = max(abs(al - bl), abs(ah - bh))
    assert h_out <= 0.5 * h_in + 1e-12


# ------------------------------------------------------------- certificates


def test_certificates():
    c = check_contraction_certificate(ContractionMap(L=0.5, eps=0.1))
    assert c.certified and c.factor == 0.5 and not c.estimated
    c = check_contraction_certificate(ContractionMap(L=0.9, eps=0.1))
    assert c.certified and c.factor == 0.9
    c = check_contraction_certificate(SaturatingMap(alpha=2, beta=0, eps=0.1))
    assert not c.certified and c.factor == 2.0
    assert not check_contraction_certificate(MergingMap(lam=0.5)).certified


def test_estimated_certificate():
    m = PiecewiseAffineMap.from_json({"pieces": [{"guard": [-2, 2], "coef": [0.25, 0.1], "radius": 0.05}]})
    c = check_contraction_certificate(m, samples=64)
    assert c.estimated and c.certified and c.factor == pytest.approx(0.25)
    with pytest.raises(InsufficientEvidence):
        check_contraction_certificate(m, samples=1)


# ------------------------------------------------------------------ soundness

MODELS = [
    SaturatingMap(alpha=2, beta=0, eps=0.1),
    SaturatingMap(alpha=1.7, beta=-0.07, eps=0.1),
    MergingMap(lam=0.0),
    MergingMap(lam=0.5),
    ContractionMap(L=0.5, eps=0.1),
]


@pytest.mark.parametrize("m", MODELS, ids=repr)
@given(lo=st.floats(-4, 4), width=st.floats(0, 1), u=st.lists(st.floats(0, 1), min_size=1, max_size=20))
def test_enclosure_sound(m, lo, width, u):
    hi = min(lo + width, 4.0)
    enc = m.enclose((lo, hi))
    for t in u:
        x = lo + t * (hi - lo)
        for a, b in m.point_image(x):
            assert enc.contains(a) and enc.contains(b)
            assert enc.contains(0.5 * (a + b))


@given(lo=st.floats(0.01, 3), width=st.floats(0, 1))
def test_saturating_tight_on_monotone_piece(lo, width):
    m = SaturatingMap(alpha=2, beta=0.3, eps=0.1)
    enc = m.enclose((lo, lo + width))
    (a,), (b,) = enc.hull
    true_lo = m.f(lo) - 0.1
    true_hi = m.f(lo + width) + 0.1
    assert a <= true_lo and b >= true_hi
    assert (b - a) - (true_hi - true_lo) <= 1e-12


def test_ball_radius_guarantee():
    for m in MODELS:
        g = m.ball_radius_guarantee
        if g is None:
            continue
        T, r = g
        rng = np.random.default_rng(1)
        for x in rng.uniform(-4, 4, 200):
            for a, b in m.point_image(x):
                assert b - a >= 2 * r - 1e-12


# ----------------------------------------------------------------- absorption


def test_absorbing_checks():
    check_absorbing(SaturatingMap(alpha=2, beta=0, eps=0.1), DOM)
    with pytest.raises(NotAbsorbing):
        check_absorbing(SaturatingMap(alpha=2, beta=0, eps=0.1), WorkingDomain((-1.0,), (1.0,)))
    check_absorbing(SaturatingMap(alpha=2, beta=0, eps=0.1), WorkingDomain((-2.0,), (2.0,)))
    # [-c, c] with c > alpha + |beta| + eps is absorbing
    check_absorbing(SaturatingMap(alpha=3, beta=0.5, eps=0.2), WorkingDomain((-3.71,), (3.71,)))


# ------------------------------------------------------------------ piecewise


def test_piecewise_from_json(tmp_path):
    doc = {
        "continuity": "upper_semicontinuous",
        "pieces": [
            {"guard": [-4, 0], "coef": [0.5, -1.0], "radius": 0.25},
            {"guard": [0, 4], "coef": [0.5, 1.0], "radius": 0.25},
        ],
    }
    path = tmp_path / "m.json"
    path.write_text(json.dumps(doc))
    m = PiecewiseAffineMap.from_json(path)
    assert m.continuity_class == "upper_semicontinuous"
    enc = m.enclose((1.0, 2.0))
    assert approx_interval(enc, 1.25, 2.25, tol=1e-9)
    # box through the breakpoint gets both pieces
    assert len(m.enclose((-0.5, 0.5)).intervals) == 2
    assert m.ball_radius_guarantee == (1, 0.25)


def test_piecewise_2d():
    m = PiecewiseAffineMap.from_json(
        {"pieces": [{"guard": {"lo": [-1, -1], "hi": [1, 1]}, "A": [[0.5, 0], [0, -0.5]], "b": [0, 0], "radius": 0.1}]}
    )
    enc = m.enclose(((0.0, 0.0), (1.0, 1.0)))
    (lo, hi), = enc.intervals
    assert np.allclose(lo, [-0.1, -0.6]) and np.allclose(hi, [0.6, 0.1])


def test_piecewise_gap_in_guards():
    m = PiecewiseAffineMap.from_json({"pieces": [{"guard": [0, 1], "coef": [1, 0], "radius": 0.1}]})
    with pytest.raises(UnsupportedParameter):
        m.enclose((2.0, 3.0))


def test_with_params_and_equality():
    m = SaturatingMap(alpha=2, beta=0, eps=0.1)
    n = m.with_params(beta=-0.05)
    assert n.params == {"alpha": 2.0, "beta": -0.05, "eps": 0.1}
    assert m == SaturatingMap(alpha=2.0, beta=0.0, eps=0.1) and m != n
