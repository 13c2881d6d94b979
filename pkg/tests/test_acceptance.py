"""Acceptance criteria 1-11, one PASS/FAIL line each at the stated tolerances."""

import tempfile

import numpy as np
import pytest

from conftest import CONFIGS, order, rel
from cornermass import io as bio
from cornermass.brill import (Fields, make_extreme_kerr, make_flat,
                              make_schwarzschild, scalar_curvature)
from cornermass.conformal import smoothed_problem, solve, transform
from cornermass.corner import Surface, glue, radial_fill, vacuum_side
from cornermass.errors import GlueError
from cornermass.grid import Grid2D
from cornermass.mass_energy import (HarmonicMapPoint, adm_mass, chc_distance, check_inequality,
                                    harmonic_energy)
from cornermass.pipeline import Run, load_config, run, run_stage, verify
from cornermass.potentials import PotentialSet, charges, reconstruct_fields
from cornermass.smoothing import (SidedPath, SmoothedCollar, assemble, kink_path, mollify_path,
                                  spike_check, spike_integral)
from cornermass.tphi import TPhiData, reduce, verify_identities

DELTAS = (0.1, 0.05, 0.025)

RN_GLUE = """
[seed]
kind = reissner_nordstrom
m = 1.0
q = 0.5
[grid]
n_rho = {n}
n_z = {nz}
r_max = 100
h_min = {h}
[corner]
r0 = 4.0
n_theta = 16
eps = 0.5
[smoothing]
deltas = 0.1, 0.05, 0.025
"""


def report(capsys, n, title, checks):
    """Print one line for criterion n and assert every (name, ok, value) check."""
    ok = all(c[1] for c in checks)
    detail = "; ".join(f"{name}={val}" + ("" if good else " (fail)") for name, good, val in checks)
    with capsys.disabled():
        print(f"\nacceptance {n:>2} {'PASS' if ok else 'FAIL'}  {title}: {detail}")
    assert ok, detail


def _g(x):
    return f"{x:.3g}"


@pytest.fixture(scope="module")
def glue_sweep(schw_corner, schw_chart):
    out = {}
    for d in DELTAS:
        sd = assemble(schw_corner, schw_chart, d)
        sol = solve(smoothed_problem(sd))
        out[d] = (sd, sol, transform(sd, sol))
    return out


@pytest.fixture(scope="module")
def rn_runs():
    """Charged glue at three resolutions: seed identities and charges, then per delta after transform."""
    res = []
    for n in (128, 256, 512):
        cfg = load_config(text=RN_GLUE.format(n=n, nz=2 * n, h=0.05 * 64 / n),
                          out=tempfile.mkdtemp(prefix="rn"))
        r = Run(cfg)
        run_stage(r, "gen")
        d, p, f = r.seed()
        td = reduce(d, f, p)
        q0, _ = charges(d, p, f, check=False)
        rec = {"h": d.grid.h_max, "seed": verify_identities(td), "reduced": charges(td.data, td.pots,
                                                                                      td.fields, check=False)[0],
               "q0": q0, "delta": {}}
        for dl in DELTAS:
            cd = r.conformal(dl)
            tdata, tf, _ = cd.on_grid(d, f)
            rec["delta"][dl] = (verify_identities(TPhiData(tdata, p, tf, None, None)),
                                charges(tdata, p, tf, check=False)[0])
        res.append(rec)
    return res


def test_criterion_01_flat_zero(capsys):
    g = Grid2D.stretched(64, 128, 100.0, 0.05)
    d = make_flat(g)
    pots, f = PotentialSet.zeros(d), Fields.zeros(d)
    ham = float(np.abs(scalar_curvature(d)).max())
    ids = max(verify_identities(reduce(d, f, pots)).values())
    flux, axis = charges(d, pots, f)
    q = max(abs(flux.m), abs(flux.J[0]), abs(flux.Qe), abs(axis.J[0]), abs(axis.Qe))
    I, _ = harmonic_energy(pots, d)
    m, _ = adm_mass(d)
    report(capsys, 1, "flat-space zero suite (64x128)", [
        ("constraints", max(ham, ids) < 1e-6, _g(max(ham, ids))), ("charges", q < 1e-6, _g(q)),
        ("I", abs(I) < 1e-6, _g(I)), ("m_ADM", abs(m) < 1e-6, _g(m))])


def test_criterion_02_schwarzschild(capsys):
    d = make_schwarzschild(Grid2D.stretched(128, 256, 100.0, 0.02), 1.0)
    m, _ = adm_mass(d)
    I, _ = harmonic_energy(PotentialSet.zeros(d), d)
    hs, errs = [], []
    for n in (64, 128, 256):
        g = Grid2D.stretched(n, 2 * n, 100.0, 0.05 * 64 / n)
        hs.append(g.h_max)
        errs.append(np.abs(scalar_curvature(make_schwarzschild(g, 1.0))[g.interior_mask(exclude_r=1.5)]).max())
    p = order(hs, errs)
    report(capsys, 2, "Schwarzschild identities", [
        ("m_ADM", rel(m, 1.0) <= 0.01, _g(m)), ("I", rel(I, 1.0) <= 0.01, _g(I)),
        ("mu order", p >= 1.8, _g(p))])


def test_criterion_03_kerr_rigidity(capsys):
    g = Grid2D.stretched(512, 1024, 100.0, 0.005)
    d, pots = make_extreme_kerr(g, 1.0)
    f = reconstruct_fields(d, pots)
    m, _ = adm_mass(d)
    flux, axis = charges(d, pots, f)
    v = check_inequality("a", flux)
    report(capsys, 3, "extreme-Kerr rigidity (512x1024)", [
        ("m^2/J-1", abs(m * m / axis.J[0] - 1) <= 0.02, _g(m * m / axis.J[0] - 1)),
        ("J axis/flux-1", rel(axis.J[0], flux.J[0]) <= 0.01, _g(axis.J[0] / flux.J[0] - 1)),
        ("margin(a)/m^2", abs(v.margin) / flux.m ** 2 <= 0.02, _g(v.margin / flux.m ** 2))])


def test_criterion_04_mollifier(capsys):
    p = kink_path(1.0, 0.7)
    d = 0.05
    s = np.concatenate([np.linspace(-0.3, -d / 2, 40), np.linspace(d / 2, 0.3, 40)])
    outside = all(np.array_equal(a, b) for a, b in zip(mollify_path(p, d, s), p(s)))
    errs = []
    for dl in DELTAS:
        ss = np.linspace(-dl, dl, 2001)
        errs.append(np.abs(mollify_path(p, dl, ss)[0] - p(ss)[0]).max())
    expo = order(DELTAS, errs)

    def side(b):
        return lambda t: (1.0 + b * np.asarray(t)[:, None], np.full((len(t), 1), b), np.zeros((len(t), 1)))

    asym = SidedPath(side(-0.3), side(0.9))
    h = 1e-7
    v = mollify_path(asym, d, np.array([-2, -1, 0, 1, 2]) * h)[0][:, 0]
    left, right = (v[2] - 2 * v[1] + v[0]) / h ** 2, (v[4] - 2 * v[3] + v[2]) / h ** 2
    c2 = rel(left, right)
    report(capsys, 4, "mollifier lemma (kink model)", [
        ("outside exact", outside, outside), ("exponent", expo >= 1.9, _g(expo)),
        ("C2 mismatch", c2 < 1e-3, _g(c2))])


def test_criterion_05_spike_law(capsys, schw_corner, schw_chart, doubled_corner):
    rep = spike_check(schw_corner, schw_chart, DELTAS, n_stations=8)
    c2, ch2 = doubled_corner
    ratio = spike_integral(SmoothedCollar(ch2, 0.05)) / spike_integral(SmoothedCollar(schw_chart, 0.05))
    jr = float(np.mean(c2.jump / schw_corner.jump))
    dev = float(np.abs(ratio / 2 - 1).max())
    report(capsys, 5, "spike law (Schwarzschild/flat, r0 = 4)", [
        ("kappa", True, _g(rep.kappa)), ("1/8pi", True, _g(rep.expected)),
        ("scatter", rep.scatter < 0.05, _g(rep.scatter)),
        ("jump ratio", abs(jr - 2) < 1e-6, _g(jr)), ("doubling dev", dev < 0.05, _g(dev))])


def test_criterion_06_conformal(capsys, glue_sweep, schw_outer):
    m0, _ = adm_mass(schw_outer)
    min_u = min(s.u.min() for _, s, _ in glue_sweep.values())
    fit = max(rel(s.A_fit, s.A_volume) for _, s, _ in glue_sweep.values())
    A = [glue_sweep[d][1].A_volume for d in DELTAS]
    dec = all(b < a for a, b in zip(A, A[1:]))
    shift = max(rel(adm_mass(c.on_grid(schw_outer)[0])[0] - m0, s.mass_shift)
                for _, s, c in glue_sweep.values())
    mu = min(c.min_mu_tilde for _, _, c in glue_sweep.values())
    report(capsys, 6, "conformal suite", [
        ("min u", min_u >= 1.0, repr(float(min_u))), ("A fit/volume", fit <= 0.02, _g(fit)),
        ("A decreasing", dec, ",".join(_g(a) for a in A)), ("A_min", A[-1] < 1e-3, _g(A[-1])),
        ("mass shift", shift <= 0.01, _g(shift)), ("min mu~", mu >= -1e-8, _g(mu))])


def test_criterion_07_mass_convergence(capsys, glue_sweep, schw_outer):
    m0, _ = adm_mass(schw_outer)
    gaps = [abs(adm_mass(glue_sweep[d][2].on_grid(schw_outer)[0])[0] - m0) for d in DELTAS]
    dec = all(b < a for a, b in zip(gaps, gaps[1:]))
    report(capsys, 7, "mass convergence", [
        ("|m(delta)-m|", dec, ",".join(_g(x) for x in gaps)),
        ("relative at smallest", gaps[-1] / abs(m0) < 0.01, _g(gaps[-1] / abs(m0)))])


def test_criterion_08_identities(capsys, rn_runs, schw_corner, schw_chart):
    hs = [r["h"] for r in rn_runs]
    checks = []
    names = ("trk", "J_eta1", "divB", "divE")
    for key in names:
        errs = [r["seed"][key] for r in rn_runs]
        ok = max(errs) < 1e-12 or order(hs, errs) >= 1.8
        checks.append((f"seed {key}", ok, _g(max(errs)) if max(errs) < 1e-12 else _g(order(hs, errs))))
    for dl in DELTAS:
        for key in names:
            errs = [r["delta"][dl][0][key] for r in rn_runs]
            if max(errs) < 1e-12:
                continue
            p = order(hs, errs)
            checks.append((f"d={dl} {key}", p >= 1.8, _g(p)))
    # Kerr carries the momentum constraint
    kh, ke = [], []
    for n in (64, 128, 256):
        g = Grid2D.stretched(n, 2 * n, 100.0, 0.02 * 128 / n)
        d, pots = make_extreme_kerr(g, 1.0)
        kh.append(g.h_max)
        ke.append(verify_identities(reduce(d, reconstruct_fields(d, pots), pots))["J_eta1"])
    checks.append(("Kerr J_eta", order(kh, ke) >= 1.8, _g(order(kh, ke))))
    # smoothed collar fields are built from potentials: maximal and divergence free by construction,
    # and vacuum fields stay zero
    f = assemble(schw_corner, schw_chart, 0.025).fields(np.linspace(-0.0125, 0.0125, 21))
    z = max(np.abs(v).max() for v in f.values())
    checks.append(("smoothed vacuum fields", z < 1e-8, _g(z)))
    report(capsys, 8, "identity preservation", checks)


def test_criterion_09_charges(capsys, rn_runs, schw_corner, schw_chart):
    checks = []
    for r in rn_runs:
        ref = 5 * max(r["q0"].error.get("Qe", 0.0), 1e-12)
        dq = abs(r["reduced"].Qe - r["q0"].Qe)
        checks.append((f"reduce h={_g(r['h'])}", dq <= ref, _g(dq)))
        for dl in DELTAS:
            dq = abs(r["delta"][dl][1].Qe - r["q0"].Qe)
            checks.append((f"transform d={dl} h={_g(r['h'])}", dq <= ref, _g(dq)))
    # smoothing is local: every potential trace outside O_delta is bit-identical
    sc = SmoothedCollar(schw_chart, 0.05)
    t = np.concatenate([np.linspace(-0.9, -0.025, 15), np.linspace(0.025, 0.9, 15)])
    same = all(np.array_equal(a, b) for a, b in zip(sc.raw(t), sc.path(t)))
    checks.append(("smooth locality", same, same))
    d, pots = make_extreme_kerr(Grid2D.stretched(128, 256, 100.0, 0.02), 1.0)
    f = reconstruct_fields(d, pots)
    j0 = charges(d, pots, f)[0]
    td = reduce(d, f, pots)
    j1 = charges(td.data, td.pots, td.fields)[0]
    dj = abs(j1.J[0] - j0.J[0])
    checks.append(("Kerr J reduce", dj <= 5 * max(j0.error.get("J1", 0.0), 1e-12), _g(dj)))
    report(capsys, 9, "charge conservation", checks)


def test_criterion_10_metric(capsys):
    rng = np.random.default_rng(2024)
    sym = tri = env = 0.0
    for _ in range(100):
        p, q, s = (HarmonicMapPoint(*rng.uniform(-1, 1, 4)) for _ in range(3))
        rho = float(rng.uniform(0.3, 3.0))
        dpq = chc_distance(p, q, rho)
        sym = max(sym, abs(dpq.value - chc_distance(q, p, rho).value))
        tri = max(tri, dpq.value - chc_distance(p, s, rho).value - chc_distance(s, q, rho).value)
        env = max(env, dpq.value - dpq.envelope)
    report(capsys, 10, "complex hyperbolic metric checks (100 triples)", [
        ("symmetry", sym <= 1e-10, _g(sym)), ("triangle excess", tri <= 1e-8, _g(tri)),
        ("envelope excess", env <= 0.0, _g(env))])


def test_criterion_11_negative(capsys, schw_outer, tmp_path):
    fill = radial_fill(schw_outer, 4.0)
    shift = -0.5 * np.log(1.01)
    bad = fill.with_fields(U=fill.U + shift,
                           exact=lambda rho, z: {k: v + (shift if k == "U" else 0.0)
                                                 for k, v in fill.exact(rho, z).items()})
    try:
        glue(vacuum_side(bad), vacuum_side(schw_outer), Surface(4.0))
        raised = False
    except GlueError:
        raised = True
    text = (CONFIGS / "schwarzschild-flat-glue.cfg").read_text().replace("slope_factor = 0",
                                                                          "slope_factor = 2")
    cfg = load_config(text=text, out=tmp_path)
    run(cfg, upto="glue")
    jump = min(r["jump"] for r in bio.read_csv(tmp_path / "corner.csv"))
    fails = [f["check"] for f in verify(cfg)]
    report(capsys, 11, "negative tests", [
        ("glue mismatch raises", raised, raised), ("injected jump", jump < 0, _g(jump)),
        ("verify flags it", fails == ["hypothesis:mean_curvature"], fails)])
