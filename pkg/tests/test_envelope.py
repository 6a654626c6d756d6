import math

import numpy as np
import pytest

from smallcap.boxgeom import OrientedBox
from smallcap.caps import canonical_caps, dyadic_scales, envelope_dims, sector_planks
from smallcap.envelope import (G_CONSTANT, ThetaDecomposition, amplitude_check, envelope_summary,
                               gwz_rhs, l2_decomposition_defect, layer_cake, lp_power,
                               restricted_rhs, significant_cells, superlevel_measure, sup_norm,
                               tile_box, wave_envelope)
from smallcap.extremals import cone_bump, random_cone_function
from smallcap.signal import GridFunction, GridSpec, curve_grid, neighbourhood_bump, smooth_partition

R = 2**4


@pytest.fixture(scope="module")
def rand():
    return ThetaDecomposition(random_cone_function(R, 1), R)


@pytest.fixture(scope="module")
def single():
    """A function whose spectrum sits on one canonical cap, at R = 2^5."""
    R5 = 2**5
    g = curve_grid("cone", R5)
    part = smooth_partition(canonical_caps(R5, "cone"), g)
    f = GridFunction.from_spectrum(g, part[3].dense() * neighbourhood_bump("cone", g, R5))
    return ThetaDecomposition(f, R5)


def whole_torus(grid):
    return OrientedBox(np.zeros(3), np.eye(3), [grid.L] * 3)


# envelopes ---------------------------------------------------------------------

def test_zero_function():
    g = curve_grid("cone", R)
    dec = ThetaDecomposition(GridFunction(g, np.zeros(g.N)), R)
    assert wave_envelope(dec, 0.5, 0, whole_torus(g)) == 0
    with pytest.raises(ZeroDivisionError):
        l2_decomposition_defect(dec, 0.5)
    assert gwz_rhs(dec) == 0


def test_full_domain_envelope_is_sum_of_pieces(rand):
    g = rand.f.grid
    fam = sector_planks(R, 1.0)
    total = sum(wave_envelope(rand, 1.0, t, whole_torus(g)) for t in range(len(fam)))
    pieces = sum(float(np.sum(e)) for e in rand.energy) * rand.cell
    assert math.isclose(total, pieces, rel_tol=1e-10)


def test_bad_tau_index(rand):
    with pytest.raises(IndexError):
        wave_envelope(rand, 1.0, 99, whole_torus(rand.f.grid))


@pytest.mark.parametrize("s", dyadic_scales(R))
def test_tiles_partition_each_tau(rand, s):
    sd = rand.scale(s)
    for tau, (U, keys, mass) in enumerate(sd.tiles):
        direct = float(np.sum(rand.tau_energy(sd.family, tau))) * rand.cell
        assert math.isclose(float(np.sum(mass)), direct, rel_tol=1e-9)


def test_tile_mass_matches_direct_sum(rand):
    sd = rand.scale(0.5)
    U, keys, mass = sd.tiles[0]
    j = int(np.argmax(mass))
    box = tile_box(U, keys[j])
    # tiles are half-open [-h, h) along each axis; nudge the closed box down to match
    eps = 1e-9 * box.half_lengths
    half_open = OrientedBox(box.center - eps @ box.axes, box.axes, box.half_lengths - eps / 2)
    assert math.isclose(wave_envelope(rand, 0.5, 0, half_open), mass[j], rel_tol=1e-9)


def test_tile_volume_is_box_volume(rand):
    for s in dyadic_scales(R):
        sd = rand.scale(s)
        assert math.isclose(sd.volume, R**3 * s**3)
        assert math.isclose(sd.volume, float(np.prod(envelope_dims(s, R))))


def test_l2_identity_random(rand):
    for s in dyadic_scales(R):
        assert 0.25 <= l2_decomposition_defect(rand, s) <= 4


def test_l2_identity_single_theta(single):
    for s in dyadic_scales(single.R):
        assert 0.5 <= l2_decomposition_defect(single, s) <= 2


def test_gwz_single_theta_measured_bound(single):
    assert lp_power(single.f, 4) / gwz_rhs(single) <= 16


@pytest.mark.xfail(strict=True, reason="a peaked single-cap bump gives ||f||_4^4 / RHS ~ 12; see notes")
def test_gwz_single_theta_within_four(single):
    assert lp_power(single.f, 4) / gwz_rhs(single) <= 4


def test_gwz_homogeneity(rand):
    c = 1.7 - 0.4j
    scaled = ThetaDecomposition(rand.f.scaled(c), R)
    assert math.isclose(gwz_rhs(scaled), abs(c) ** 4 * gwz_rhs(rand), rel_tol=1e-12)
    lam = 0.5 * sup_norm(rand.f)
    assert math.isclose(restricted_rhs(scaled, abs(c) * lam), abs(c) ** 4 * restricted_rhs(rand, lam),
                        rel_tol=1e-12)
    assert math.isclose(scaled.scale(0.5).total(), abs(c) ** 2 * rand.scale(0.5).total(), rel_tol=1e-12)


def test_translation_robustness(rand):
    moved = ThetaDecomposition(rand.f.shifted((3, 5, 2)), R)
    assert 0.5 <= gwz_rhs(moved) / gwz_rhs(rand) <= 2
    lam = 0.5 * sup_norm(rand.f)
    assert 0.5 <= amplitude_check(moved, lam)[1] / amplitude_check(rand, lam)[1] <= 2


def test_gwz_bump_ratio_bounded():
    # the constant is about 60 for R = 16..64; the growth rate is checked in the acceptance suite
    dec = ThetaDecomposition(cone_bump(R), R)
    assert 1 <= lp_power(dec.f, 4) / gwz_rhs(dec) <= 100


# significant cells ---------------------------------------------------------------

def test_tiny_lambda_selects_all_nonzero(rand):
    for s in dyadic_scales(R):
        n = int(np.count_nonzero(rand.scale(s).masses() > 0))
        assert len(significant_cells(rand, 1e-30, s)) == n


def test_huge_lambda_selects_nothing(rand):
    peak = float(np.max(sum(rand.energy)))
    for s in dyadic_scales(R):
        n = rand.scale(s).n_tau
        lam = 1.01 * n * math.sqrt(peak * math.log(R) / G_CONSTANT)
        assert significant_cells(rand, lam, s) == []


def test_cells_monotone_in_lambda(rand):
    top = sup_norm(rand.f)
    for s in dyadic_scales(R):
        prev = None
        for lam in top * np.array([0.01, 0.1, 0.5, 1.0, 2.0]):
            cells = {(c.tau, tuple(np.round(c.U.center, 6))) for c in significant_cells(rand, lam, s)}
            if prev is not None:
                assert cells <= prev
            prev = cells


def test_cells_carry_tile_data(rand):
    cells = significant_cells(rand, 0.3 * sup_norm(rand.f), 0.5)
    assert cells
    for c in cells[:5]:
        assert c.s == 0.5 and c.l2sq > 0
        assert math.isclose(c.U.volume, R**3 * 0.125)


def test_nonpositive_lambda(rand):
    with pytest.raises(ValueError):
        significant_cells(rand, 0.0, 0.5)
    with pytest.raises(ValueError):
        amplitude_check(rand, -1.0)


# amplitude inequality -------------------------------------------------------------

def test_amplitude_rhs_below_gwz(rand):
    total = gwz_rhs(rand)
    top = sup_norm(rand.f)
    for lam in top * np.array([1e-3, 0.1, 0.5, 0.9, 1.0]):
        lhs, rhs = amplitude_check(rand, lam)
        assert rhs <= total and lhs >= 0


def test_amplitude_above_max(rand):
    lhs, rhs = amplitude_check(rand, sup_norm(rand.f) * (1 + 1e-9))
    assert lhs == 0 and rhs >= 0


def test_bump_amplitude_ratio():
    dec = ThetaDecomposition(cone_bump(R), R)
    lhs, rhs = amplitude_check(dec, abs(dec.f.at_origin()) / 2)
    assert lhs / rhs <= 8 * R**0.3


# superlevel sets -------------------------------------------------------------------

def test_superlevel_full_volume():
    g = GridSpec(8.0, (8, 8, 8), (0.0, 0.0, 0.0))
    f = GridFunction(g, np.full(g.N, 0.3))
    assert superlevel_measure(f, 0.0) == g.volume
    with pytest.raises(ValueError):
        superlevel_measure(f, -1.0)


def test_superlevel_monotone(rand):
    top = sup_norm(rand.f)
    vals = [superlevel_measure(rand.f, lam) for lam in np.linspace(0, top, 20)]
    assert all(a >= b for a, b in zip(vals, vals[1:])) and vals[-1] == 0


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_layer_cake(seed):
    g = GridSpec(8.0, (16, 16, 16), (0.0, 0.0, 0.0))
    rng = np.random.default_rng(seed)
    f = GridFunction(g, rng.normal(size=g.N) * np.exp(rng.normal(size=g.N)))
    lc, exact = layer_cake(f, 4), lp_power(f, 4)
    assert exact / 8 <= lc <= 8 * exact


def test_layer_cake_zero():
    g = GridSpec(4.0, (4, 4, 4), (0.0, 0.0, 0.0))
    assert layer_cake(GridFunction(g, np.zeros(g.N)), 4) == 0.0


# summary -----------------------------------------------------------------------------

def test_summary_shape(rand):
    out = envelope_summary(rand, lam=0.5 * sup_norm(rand.f))
    assert {"R", "per_scale", "gwz_lhs", "gwz_rhs", "ratio", "g_constant", "lambda",
            "amplitude_lhs", "amplitude_rhs"} <= set(out)
    assert [row["s"] for row in out["per_scale"]] == dyadic_scales(R)
    assert out["amplitude_rhs"] <= out["gwz_rhs"]
    assert all({"s", "n_tau", "n_cells", "sum", "n_significant"} <= set(r) for r in out["per_scale"])


def test_requires_3d():
    g = GridSpec(8.0, (8, 8), (0.0, 0.0))
    with pytest.raises(ValueError):
        ThetaDecomposition(GridFunction(g, np.zeros(g.N)), 8)
