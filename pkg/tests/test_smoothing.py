import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import order, rel
from cornermass.brill import make_extreme_kerr, make_flat
from cornermass.corner import CornerData, Surface, collar, glue, radial_fill, vacuum_side
from cornermass.errors import CollarError, ConfigError, GlueError
from cornermass.grid import Grid2D
from cornermass.smoothing import (SidedPath, SmoothedCollar, assemble, cutoff, kink_path,
                                  mollifier, mollify_path, mollify_potentials, spike_check,
                                  spike_integral)

DELTAS = (0.1, 0.05, 0.025)


def _affine_kink(a, b_minus, b_plus):
    """a + b_minus t for t < 0, a + b_plus t for t >= 0."""
    def side(b):
        def f(t):
            t = np.asarray(t, float)[:, None]
            return a + b * t, np.full(t.shape, b), np.zeros(t.shape)
        return f
    return SidedPath(side(b_minus), side(b_plus))


@pytest.fixture(scope="module")
def flat_side():
    return vacuum_side(make_flat(Grid2D.stretched(64, 128, 100.0, 0.05)))


@pytest.fixture(scope="module")
def same_corner(schw_outer):
    side = vacuum_side(schw_outer)
    c = glue(side, side, Surface(4.0))
    return c, collar(c, 0.5, n_theta=16)


@pytest.fixture(scope="module")
def kerr_reglued(grid128):
    d, pots = make_extreme_kerr(grid128, 1.0)
    side = vacuum_side(d, pots)
    c = glue(side, side, Surface(3.0))
    return c, collar(c, 0.5, n_theta=16)


# -- mollifier pieces -------------------------------------------------------

def test_mollifier_normalised():
    x, w = np.polynomial.legendre.leggauss(200)
    assert abs(np.dot(w, mollifier(x)) - 1) < 1e-12
    assert not np.any(mollifier(np.array([-1.0, 1.0, 1.5])))


def test_cutoff_plateau_and_support():
    t = np.linspace(-1, 1, 2001)
    v, _, _ = cutoff(t)
    assert np.all(v[np.abs(t) <= 0.25] == 0.01)
    assert np.all(v[np.abs(t) >= 0.5] == 0.0)
    assert np.all((v >= 0) & (v <= 0.01))


# -- mollify_path -----------------------------------------------------------

def test_constant_path_exact():
    p = kink_path(2.5, 0.0)
    s = np.linspace(-0.05, 0.05, 101)
    v, d1, d2 = mollify_path(p, 0.1, s)
    assert np.abs(v - 2.5).max() < 1e-14 and not np.any(d1) and not np.any(d2)


def test_kink_second_differences_agree():
    p = _affine_kink(1.0, -0.3, 0.9)
    h = 1e-7
    s = np.array([-2, -1, 0, 1, 2]) * h
    v = mollify_path(p, 0.05, s)[0][:, 0]
    left = (v[2] - 2 * v[1] + v[0]) / h ** 2
    right = (v[4] - 2 * v[3] + v[2]) / h ** 2
    exact = mollify_path(p, 0.05, [0.0])[2][0, 0]
    assert rel(left, right) < 1e-3
    assert rel(left, exact) < 1e-3


def test_kink_deviation_order():
    p = kink_path(1.0, 0.7)
    errs = []
    for d in DELTAS:
        s = np.linspace(-d, d, 2001)
        errs.append(np.abs(mollify_path(p, d, s)[0] - p(s)[0]).max())
    assert order(DELTAS, errs) >= 1.9


def test_path_untouched_outside():
    p = kink_path(0.2, -1.3)
    d = 0.05
    s = np.concatenate([np.linspace(-0.3, -d / 2, 50), np.linspace(d / 2, 0.3, 50)])
    for a, b in zip(mollify_path(p, d, s), p(s)):
        assert np.array_equal(a, b)


def test_seam_c1_matching():
    # gamma_delta is smooth at |t| = delta/2; the one-sided first differences agree to O(h)
    p = _affine_kink(0.0, -0.4, 1.1)
    d = 0.05
    gaps = []
    hs = (1e-3, 5e-4, 2.5e-4)
    for h in hs:
        s = d / 2 + np.array([-h, 0.0, h])
        v = mollify_path(p, d, s)[0][:, 0]
        gaps.append(abs((v[2] - v[1]) / h - (v[1] - v[0]) / h))
    assert all(g <= h * abs(1.1 + 0.4) for g, h in zip(gaps, hs))


def test_mollify_rejects_bad_delta():
    p = kink_path(0.0, 1.0)
    with pytest.raises(ConfigError):
        mollify_path(p, 0.0, [0.0])
    with pytest.raises(ConfigError):
        mollify_path(p, 0.3, [0.0], eps=0.5)


# -- mollify_potentials -----------------------------------------------------

def test_potential_constant_and_axis_values():
    # on the axis each potential is constant in t, so the mollified trace keeps its value
    p = kink_path(np.array([1.0, -2.0, 0.5]), 0.0, components=3)
    s = np.linspace(-0.05, 0.05, 41)
    v = mollify_potentials(p, 0.1, s)[0]
    assert np.abs(v - p(s)[0]).max() < 1e-14


def test_potential_derivative_uniform():
    b = 0.8
    p = kink_path(0.0, b)
    sups = []
    for d in DELTAS:
        s = np.linspace(-d / 2, d / 2, 4001)
        sups.append(np.abs(mollify_potentials(p, d, s)[1]).max())
    assert max(sups) <= 1.1 * b
    assert np.ptp(sups) < 0.1 * b


amp = st.floats(-2.0, 2.0, allow_nan=False)


@settings(max_examples=30, deadline=None)
@given(a=amp, bm=amp, bp=amp, d=st.floats(0.01, 0.2))
def test_mollify_path_property(a, bm, bp, d):
    p = _affine_kink(a, bm, bp)
    s = np.linspace(-d, d, 101)
    v = mollify_path(p, d, s)[0]
    base = p(s)[0]
    out = np.abs(s) >= d / 2
    assert np.array_equal(v[out], base[out])
    # |gamma_delta - gamma| <= sup sigma_delta * |[gamma']| * int |tau| phi
    assert np.abs(v - base).max() <= 0.01 * d * d * abs(bp - bm) + 1e-14


# -- glue -----------------------------------------------------------------

def test_glue_schwarzschild_flat(schw_corner, oracle):
    assert np.all(schw_corner.jump > 0)
    assert np.abs(schw_corner.jump / oracle["flat_fill_jump_r4"] - 1).max() < 1e-6
    assert schw_corner.report["metric_U"] < 1e-12


def test_glue_identical_sides(same_corner):
    c, _ = same_corner
    assert np.abs(c.H_minus - c.H_plus).max() < 1e-10


def test_glue_metric_mismatch(schw_outer):
    # 1% scale error on the induced metric, i.e. U shifted by -log(1.01)/2
    fill = radial_fill(schw_outer, 4.0)
    shift = -0.5 * np.log(1.01)

    def exact(rho, z):
        e = fill.exact(rho, z)
        return {"U": e["U"] + shift, "alpha": e["alpha"]}

    bad = fill.with_fields(U=fill.U + shift, exact=exact)
    with pytest.raises(GlueError) as exc:
        glue(vacuum_side(bad), vacuum_side(schw_outer), Surface(4.0))
    assert exc.value.location is not None


def test_glue_nonsphere_rejected(flat_side):
    with pytest.raises(ConfigError):
        glue(flat_side, flat_side, Surface(4.0, 0.1, 4))


# -- collar ---------------------------------------------------------------

def test_flat_collar_is_radial(flat_side):
    c = glue(flat_side, flat_side, Surface(2.0))
    ch = collar(c, 0.5, n_theta=8)
    assert ch.radial
    for side in ("minus", "plus"):
        nd = ch.nodes[side]
        assert np.abs(nd["r"] - 2.0 - nd["t"]).max() < 1e-10
    t = np.linspace(-0.9, 0.9, 7)
    a = ch.sample(t)[0][:, ch.index("a")]
    assert np.abs(a - (2 + t)[:, None] ** 2).max() < 1e-9


def test_schwarzschild_collar(schw_chart):
    assert schw_chart.jacobian_min > 0
    assert schw_chart.offdiag_max < 1e-6


def test_wiggly_collar_fails(flat_side):
    c = CornerData(flat_side, flat_side, Surface(4.0, 0.3, 8), np.array([0.5]),
                   np.zeros(1), np.zeros(1))
    collar(c, 0.05, n_theta=16)
    with pytest.raises(CollarError):
        collar(c, 1.0, n_theta=16)


# -- assemble ---------------------------------------------------------------

def test_assemble_locality(schw_corner, schw_chart):
    sd = assemble(schw_corner, schw_chart, 0.05)
    t = np.concatenate([np.linspace(-0.9, -0.025, 20), np.linspace(0.025, 0.9, 20)])
    g, b = sd.collar.geometry(t), sd.collar.background(t)
    for key in ("R", "mu_bar", "k13", "E1", "B1"):
        assert np.array_equal(g[key], b[key])
    assert sd.region() == (-0.025, 0.025)


def test_assemble_noop(same_corner):
    c, ch = same_corner
    sc = SmoothedCollar(ch, 0.05)
    t = np.linspace(-0.02, 0.02, 9)
    assert np.abs(sc.raw(t)[0] - sc.path(t)[0]).max() < 1e-9
    assert np.abs(sc.geometry(t)["mu_bar"] - sc.background(t)["mu_bar"]).max() < 1e-6


def test_vacuum_glue_has_no_fields(schw_corner, schw_chart):
    sd = assemble(schw_corner, schw_chart, 0.05)
    f = sd.fields(np.linspace(-0.025, 0.025, 21))
    assert max(np.abs(v).max() for v in f.values()) < 1e-8


def test_assemble_rejects_large_delta(schw_corner, schw_chart):
    with pytest.raises(ConfigError):
        assemble(schw_corner, schw_chart, 0.6)


def test_kerr_reglued_fields(kerr_reglued):
    c, ch = kerr_reglued
    sups = []
    for d in DELTAS:
        sd = assemble(c, ch, d)
        out = np.concatenate([np.linspace(-0.9, -d / 2, 10), np.linspace(d / 2, 0.9, 10)])
        f, b = sd.fields(out), sd.collar.background(out)
        assert all(np.array_equal(f[k], b[k]) for k in f)
        t = np.linspace(-d / 2, d / 2, 41)
        f, b = sd.fields(t), sd.collar.background(t)
        scale = np.abs(b["k13"]).max()
        assert np.abs(f["k13"] - b["k13"]).max() < scale
        sups.append(np.abs(f["k13"]).max())
    # uniform bounds over the sweep
    assert np.ptp(sups) < 0.1 * max(sups)


# -- spike law --------------------------------------------------------------

def test_spike_law(schw_corner, schw_chart, oracle):
    rep = spike_check(schw_corner, schw_chart, DELTAS, n_stations=8)
    assert rep.scatter < 0.05
    assert rel(rep.kappa, oracle["spike_kappa"]) < 0.05
    assert len(rep.table) == 3 * 8


def test_spike_doubles(schw_chart, doubled_corner):
    c2, ch2 = doubled_corner
    S1 = spike_integral(SmoothedCollar(schw_chart, 0.05))
    S2 = spike_integral(SmoothedCollar(ch2, 0.05))
    assert np.abs(S2 / S1 - 2).max() < 0.1


def test_zero_jump_spike_vanishes(same_corner):
    _, ch = same_corner
    S = spike_integral(SmoothedCollar(ch, 0.05))
    assert np.abs(S).max() < 1e-8
