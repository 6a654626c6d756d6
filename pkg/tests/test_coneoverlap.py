import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from smallcap.boxgeom import overlap_counts
from smallcap.caps import cone_caps
from smallcap.coneoverlap import (RegimeReport, analytic_slice, brute_overlap, d_limit,
                                  distance_to_circle, plank_arrays, plank_count, predicted_overlap,
                                  regime_windows, sample_regimes, slice_family, slice_heights,
                                  slice_integral, slice_report, support_edge, total_integral)
from smallcap.lattice import rect_power_sum


# slice family -----------------------------------------------------------------------

def test_plank_count_matches_gamma_family():
    for R, b in ((2**10, 0.75), (2**12, 0.75), (2**8, 0.5)):
        assert plank_count(R, b) == len(cone_caps(R, b))
        assert len(slice_family(R, b, 20.0)) == plank_count(R, b)


@given(st.floats(0, 4096))
@settings(max_examples=30)
def test_centers_on_circle_and_tangent_orthogonal(r):
    for pl in slice_family(2**12, 0.75, r)[::97]:
        assert abs(math.hypot(*pl.center) - r) <= 1e-9 * max(1, r)
        assert abs(np.dot(pl.center, pl.tangent)) <= 1e-9 * max(1, r)
        assert pl.half_lengths == (0.5, 0.5 * 2**9)


@pytest.mark.parametrize("r", [10.0, 64.0, 512.0, 4096.0])
def test_center_spacing(r):
    R, b = 2**12, 0.75
    fam = slice_family(R, b, r)
    gap = math.dist(fam[0].center, fam[1].center)
    assert r * R**-b / 8 <= gap <= 8 * r * R**-b


def test_rejects_out_of_range_height():
    with pytest.raises(ValueError):
        slice_family(2**8, 0.75, 300.0)


# counting --------------------------------------------------------------------------

def test_far_point_sees_nothing():
    R, b, r = 2**10, 0.75, 64.0
    fam = slice_family(R, b, r)
    assert brute_overlap((r + R**b + 2, 0.0), fam) == 0


def test_bush_at_origin():
    R, b = 2**10, 0.75
    for r in (0.0, 0.25):
        assert brute_overlap((0.0, 0.0), slice_family(R, b, r)) == plank_count(R, b)
    # below r = 10 the bush holds after widening the unit side to 20
    fam = slice_family(R, b, 9.9)
    assert overlap_counts([p.box().dilate(20.0) for p in fam], np.zeros((1, 2)))[0] == len(fam)


def test_inner_regime_example():
    R, b, r, d = 2**12, 0.75, 64.0, 16.0
    fam = slice_family(R, b, r)
    rng = np.random.default_rng(0)
    psi = rng.uniform(0, 2 * math.pi, 50)
    pts = (r + d) * np.stack([np.cos(psi), np.sin(psi)], 1)
    counts = brute_overlap(pts, fam)
    assert np.all((counts >= 16 / 4) & (counts <= 16 * 4))


def test_brute_overlap_scalar_and_array():
    fam = slice_family(2**8, 0.75, 20.0)
    assert isinstance(brute_overlap((20.0, 0.0), fam), int)
    assert brute_overlap(np.array([[20.0, 0.0], [0.0, 20.0]]), fam).shape == (2,)


def test_area_sum():
    R, b, r = 2**10, 0.75, 32.0
    c, a, h = plank_arrays(slice_family(R, b, r))
    total, _ = rect_power_sum(c, a, h, None, 1.0)
    area = plank_count(R, b) * R**b
    assert area / 2 <= total <= 2 * area


def test_distance_to_circle():
    np.testing.assert_allclose(distance_to_circle([[3.0, 4.0], [0.0, 1.0]], 2.0), [3.0, 1.0])


# predictions -----------------------------------------------------------------------

def test_prediction_regimes():
    R, b = 2**12, 0.75
    Rb = R**b
    assert predicted_overlap(5.0, 64.0, R, b) == (64**-0.5 * Rb, "core")
    v, reg = predicted_overlap(30.0, 64.0, R, b)
    assert reg == "inner" and math.isclose(v, Rb / math.sqrt(64 * 30))
    v, reg = predicted_overlap(100.0, 64.0, R, b)
    assert reg == "outer" and math.isclose(v, Rb / 100)


@given(st.floats(10.5, 512))
def test_prediction_continuous_at_d_equals_r(r):
    R, b = 2**12, 0.75
    inner = R**b / math.sqrt(r * r)
    outer = R**b / r
    assert math.isclose(inner, outer)
    assert math.isclose(predicted_overlap(r, r, R, b)[0], outer)


def test_prediction_at_support_edge_is_one():
    R, b = 2**12, 0.75
    for r in (16.0, 100.0, 512.0):
        assert math.isclose(predicted_overlap(R**b, r, R, b)[0], 1.0)


def test_prediction_out_of_range_and_errors():
    R, b = 2**12, 0.75
    assert predicted_overlap(R**b * 1.01, 64.0, R, b) == (0.0, "out_of_range")
    # above R^beta the range shrinks to r^-1 R^{2 beta}
    assert d_limit(2048.0, R, b) == R ** (2 * b) / 2048
    assert predicted_overlap(200.0, 2048.0, R, b)[1] == "out_of_range"
    with pytest.raises(ValueError):
        predicted_overlap(1.0, 5.0, R, b)


def test_regime_windows_avoid_seams_and_edge():
    R, b = 2**12, 0.75
    for r in (16.0, 64.0, 512.0):
        w = regime_windows(r, R, b)
        top = support_edge(r, R, b) / 2
        for name, (lo, hi) in w.items():
            assert lo < hi <= max(top, 5.0) + 1e-9
            assert not (5 < lo < 20) and not (5 < hi < 20) or name == "core"
            assert not (r / 2 < lo < 2 * r) and not (r / 2 < hi < 2 * r) or hi <= 5


def test_sample_regimes_small():
    reps = sample_regimes(2**12, 0.75, 64.0, n=30, seed=1)
    assert {x.regime for x in reps} == {"core", "inner"}
    for x in reps:
        assert 1 / 8 <= x.ratio <= 8
    d = reps[0].to_dict()
    assert set(d) == {"point", "d", "regime", "predicted", "measured"}


def test_report_ratio_handles_zero_prediction():
    assert RegimeReport((0.0, 0.0), 1.0, "out_of_range", 0.0, 3).ratio == math.inf


# integrals -------------------------------------------------------------------------

def test_slice_heights():
    assert slice_heights(16) == [0.0, 1.0, 2.0, 4.0, 8.0]


def test_bush_slice_p2():
    R, b = 2**10, 0.75
    a = analytic_slice(0.0, 2, R, b)
    assert math.isclose(a, R ** (2 * b) + R**b)
    assert a / 8 <= slice_integral(0.0, 2, R, b) <= 8 * a


@pytest.mark.parametrize("r,p", [(32.0, 4), (256.0, 6)])
def test_slice_brute_vs_analytic(r, p):
    R, b = 2**10, 0.75
    tol = 8 * math.log(R)
    ratio = slice_integral(r, p, R, b) / slice_integral(r, p, R, b, "analytic")
    assert 1 / tol <= ratio <= tol


def test_frozen_slice_values():
    R, b = 2**10, 0.75
    assert slice_integral(32.0, 4, R, b) == 331461.0
    assert math.isclose(slice_integral(32.0, 4, R, b, "analytic"), 98304.0, rel_tol=1e-12)


def test_slice_deterministic():
    a = slice_integral(100.0, 5, 2**10, 0.75)
    assert a == slice_integral(100.0, 5, 2**10, 0.75)


@given(st.floats(2, 12))
def test_analytic_continuous_across_r_equals_R_beta(p):
    R, b = 2**10, 0.75
    Rb = R**b
    below = Rb ** (1 - p / 4) * Rb ** (p / 2) + Rb ** (2 - p / 2) * Rb ** (p / 2) + Rb**2
    above = analytic_slice(Rb * (1 + 1e-12), p, R, b)
    assert 0.5 <= below / above <= 2
    assert math.isclose(analytic_slice(Rb, p, R, b), below)


def test_slice_errors():
    with pytest.raises(ValueError):
        slice_integral(10.0, 1.5, 2**8, 0.75)
    with pytest.raises(ValueError):
        slice_integral(10.0, 4, 2**8, 0.75, "magic")
    with pytest.raises(ValueError):
        analytic_slice(-1.0, 4, 2**8, 0.75)


def test_total_analytic_terms():
    R = 2**10
    # p = 8, beta = 1/2: all three terms equal R^2
    assert math.isclose(total_integral(8, R, 0.5, "analytic"), 3 * R**2)
    b = 0.75
    terms = (R**b, R ** (1.5 + b), R ** (1 + 2 * b))
    assert math.isclose(total_integral(2, R, b, "analytic"), sum(terms))
    assert max(terms) == terms[2]


def test_total_brute_vs_analytic():
    R, b, p = 2**10, 0.75, 4
    ratio = total_integral(p, R, b) / total_integral(p, R, b, "analytic")
    tol = 16 * math.log(R) ** 2
    assert 1 / tol <= ratio <= tol


def test_slice_report_shape():
    rep = slice_report(2**8, 0.75, 16.0, 4, n=5)
    assert set(rep) == {"params", "analytic", "brute", "ratio", "regime_reports"}
    assert math.isclose(rep["ratio"], rep["brute"] / rep["analytic"])
    assert slice_report(2**8, 0.75, 2.0, 4)["regime_reports"] == []
