"""Global functionals: ADM mass, the harmonic energy I(Psi), the complex
hyperbolic distance between potential maps, and the inequality checkers."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.interpolate import RectBivariateSpline

from .errors import AxisSingularityError, ConfigError, ConsistencyError


# -- ADM mass ----------------------------------------------------------

def _sphere_nodes(n_theta):
    x, w = np.polynomial.legendre.leggauss(n_theta)
    return np.arccos(x), w


def mass_at_radius(data, R, n_theta=96, splines=None):
    """Brill flux mass on the sphere r = R.

    m(R) = 1/(4 pi) int d_r U dS + 1/(16 pi) int (2 alpha / r - 2 d_r alpha) dS,
    the linearised ADM integrand of the Brill metric.
    """
    grid = data.grid
    if splines is None:
        splines = (RectBivariateSpline(grid.rho, grid.z, data.U),
                   RectBivariateSpline(grid.rho, grid.z, data.alpha))
    su, sa = splines
    th, w = _sphere_nodes(n_theta)
    s, c = np.sin(th), np.cos(th)
    rho, z = R * s, R * c

    def d_r(spl):
        return spl.ev(rho, z, dx=1) * s + spl.ev(rho, z, dy=1) * c

    ur = d_r(su)
    al = sa.ev(rho, z)
    ar = d_r(sa)
    # dS = 2 pi R^2 d(cos theta); Gauss-Legendre weights integrate in cos theta
    area = 2 * np.pi * R * R
    m1 = area * float(np.sum(w * ur)) / (4 * np.pi)
    m2 = area * float(np.sum(w * (2 * al / R - 2 * ar))) / (16 * np.pi)
    return m1 + m2


def adm_mass(data, radii=None, n_theta=96):
    """ADM mass by the flux at two radii with Richardson extrapolation in 1/R.

    Returns (m, error_estimate).  Only n = 3 grids are supported.
    """
    if data.n != 3:
        raise ConfigError("adm_mass is implemented for n = 3")
    grid = data.grid
    ro = grid.r_outer
    if radii is None:
        radii = (0.35 * ro, 0.7 * ro)
    spl = (RectBivariateSpline(grid.rho, grid.z, data.U),
           RectBivariateSpline(grid.rho, grid.z, data.alpha))
    m1 = mass_at_radius(data, radii[0], n_theta, spl)
    m2 = mass_at_radius(data, radii[1], n_theta, spl)
    R1, R2 = radii
    m = (R2 * m2 - R1 * m1) / (R2 - R1)
    return float(m), float(abs(m - m2))


# -- harmonic energy ----------------------------------------------------------

@dataclass(frozen=True)
class HarmonicMapPoint:
    """A point (V, zeta, chi, psi) of the complex hyperbolic target."""

    V: float
    zeta: float
    chi: float
    psi: float

    def array(self):
        return np.array([self.V, self.zeta, self.chi, self.psi], float)


AXIS_TOL = 1e-2
PUNCTURE_CUT = 6
PUNCTURE_CUT_EXACT = 2


def _trap2(f, rho, z):
    return float(np.trapezoid(np.trapezoid(f, z, axis=1), rho))


def _exact_gradients(data, pots, u):
    """Gradients from the data's exact callable, keyed by 'V', 'zeta', 'chi', 'psi'.

    Only quantities the callable reproduces (potentials up to a constant) are
    returned; the rest fall back to grid differences.
    """
    if data.exact is None or u is not None:
        return {}
    R, Z = data.grid.mesh()
    r = np.hypot(R, Z)
    step = 1e-5 * np.maximum(r, 1e-3)
    base = data.exact(R, Z)
    keys = {"U": "V"}
    for name in ("zeta", "chi", "psi"):
        if name in base:
            arr = getattr(pots, name)
            arr = arr[0] if arr.ndim == 3 else arr
            off = arr[1:] - base[name][1:]
            if np.ptp(off) < 1e-8 * (1 + np.abs(arr).max()):
                keys[name] = name
    out = {}
    for k in keys:
        dr = (data.exact(R + step, Z)[k] - data.exact(R - step, Z)[k]) / (2 * step)
        dz = (data.exact(R, Z + step)[k] - data.exact(R, Z - step)[k]) / (2 * step)
        out[keys[k]] = (dr, dz)
    return out


def harmonic_density(V, pots, grid, grads=None):
    """|grad V|^2 + e^{4V} rho^-4 |Z|^2 + e^{2V} rho^-2 (|grad chi|^2 + |grad psi|^2).

    Z = d zeta + psi d chi - chi d psi.  The axis row is returned as nan.
    """
    grads = grads or {}
    zeta, chi, psi = pots.zeta[0], pots.chi, pots.psi[0]
    R, _ = grid.mesh()

    def grad(name, f):
        if name in grads:
            return list(grads[name])
        return [grid.d_rho(f), grid.d_z(f)]

    dv = grad("V", V)
    dz, dc, dp = grad("zeta", zeta), grad("chi", chi), grad("psi", psi)
    gv = dv[0] ** 2 + dv[1] ** 2
    Z2 = sum((dz[i] + psi * dc[i] - chi * dp[i]) ** 2 for i in range(2))
    em = dc[0] ** 2 + dc[1] ** 2 + dp[0] ** 2 + dp[1] ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        e = gv + np.exp(4 * V) * Z2 / R ** 4 + np.exp(2 * V) * em / R ** 2
    e[0] = np.nan
    return e


def _check_axis(pots, grid, puncture):
    z = grid.z
    away = np.abs(z) > max(2 * puncture, 4 * grid.h_max)
    for name, arr in (("zeta", pots.zeta[0]), ("chi", pots.chi), ("psi", pots.psi[0])):
        scale = max(float(np.abs(grid.d_rho(arr)).max()), float(np.abs(grid.d_z(arr)).max()))
        if scale == 0.0:
            continue
        var = float(np.abs(grid.d_z(arr)[0, away]).max())
        if var > AXIS_TOL * scale:
            raise AxisSingularityError(f"potential {name} varies along the axis "
                                       f"(|d_z| = {var:.3e}); I(Psi) diverges")


def _far_monopole(V, grid):
    """m from V ~ -m/r fitted on the outermost grid shell."""
    r, _ = grid.polar()
    edge = np.zeros(grid.shape, bool)
    edge[-1, :] = True
    edge[:, 0] = True
    edge[:, -1] = True
    return float(np.median(-V[edge] * r[edge]))


def _origin_expansion(e, r, grid, r_p):
    """(C, D) in r^2 e ~ C + D r + E r^2, fitted on r_p < r < 3 r_p off the axis."""
    sel = (r > r_p) & (r < 3 * r_p)
    sel[0] = False
    y = r[sel] ** 2 * e[sel]
    ok = np.isfinite(y)
    if ok.sum() < 6:
        raise ConfigError("grid too coarse near the puncture")
    rr = r[sel][ok]
    A = np.vstack([np.ones_like(rr), rr, rr * rr]).T
    c = np.linalg.lstsq(A, y[ok], rcond=None)[0]
    return float(c[0]), float(c[1])


def harmonic_energy(pots, data, u=None):
    """I(Psi) = 1/(8 pi) int (...) dx on R^3 minus the axis; returns (I, error).

    V = U - 2 log u when a conformal factor u (on the Brill grid) is given.
    The axis cut rho >= rho_min is taken at the first two off-axis nodes and
    Richardson-extrapolated in rho_min^2; the region beyond the grid is added
    from the monopole far field m^2 / r^4.
    """
    if data.n != 3:
        raise ConfigError("harmonic_energy is implemented for n = 3")
    grid = data.grid
    _check_axis(pots, grid, data.puncture)
    V = data.U if u is None else data.U - 2 * np.log(u)
    grads = _exact_gradients(data, pots, u)
    e = harmonic_density(V, pots, grid, grads)
    R, _ = grid.mesh()
    r, _ = grid.polar()
    rho, z = grid.rho, grid.z
    # punctures and cylindrical ends carry e ~ C / r^2 at the origin; subtract
    # C g with g = 1 / (r^2 (1 + r^2)), whose integral is known exactly
    if data.puncture > 0:
        h0 = min(float(np.diff(rho).min()), float(np.diff(z).min()))
        r_p = (PUNCTURE_CUT_EXACT if "V" in grads else PUNCTURE_CUT) * h0
        C, D = _origin_expansion(e, r, grid, r_p)
    else:
        r_p, C, D = 0.0, 0.0, 0.0
    with np.errstate(divide="ignore"):
        g = 1.0 / (r ** 2 * (1 + r ** 2))
    f = 0.25 * R * (e - C * g)            # (1/8 pi) * 2 pi rho
    f[r < r_p] = 0.0
    I1 = _trap2(f[1:], rho[1:], z)
    I2 = _trap2(f[2:], rho[2:], z)
    r1, r2 = rho[1], rho[2]
    rich = (I1 - I2) * r1 ** 2 / (r2 ** 2 - r1 ** 2)
    I0 = I1 + rich + C * np.pi / 4                   # (1/8 pi) * 4 pi * int r^2 g dr
    # excised ball, from the expansion e - C g ~ D / r + C / (1 + r^2)
    ball = 0.5 * (D * r_p ** 2 / 2 + C * (r_p - np.arctan(r_p)))
    I0 += ball
    # tail outside the rectangle, from the far field (m^2 - C) / r^4
    m = _far_monopole(V, grid)
    r_in = 0.9 * min(grid.rho_max, grid.z_max)
    gt = np.where(r > r_in, 0.25 * R / np.maximum(r, r_in) ** 4, 0.0)
    inside = _trap2(gt, rho, z)
    tail = (m * m - C) * (0.5 / r_in - inside)
    I = I0 + tail
    err = abs(rich) + 0.1 * abs(tail) + 0.05 * abs(ball) + 0.05 * abs(C) * r_p
    return float(I), float(err)


def mass_decomposition(data, pots, mu_tilde, u=None, tol_factor=5.0):
    """(I, bulk, m_adm) with bulk = int e^{-2V + 2 alpha} mu~ dx; checks m = I + bulk."""
    grid = data.grid
    I, eI = harmonic_energy(pots, data, u)
    V = data.U if u is None else data.U - 2 * np.log(u)
    R, _ = grid.mesh()
    f = 2 * np.pi * R * np.exp(-2 * V + 2 * data.alpha) * mu_tilde
    bulk = _trap2(f[1:], grid.rho[1:], grid.z)
    b2 = _trap2(f[2:], grid.rho[2:], grid.z)
    eb = abs(bulk - b2)
    if u is None:
        m, em = adm_mass(data)
    else:
        m, em = adm_mass(replace(data, U=V, exact=None))
    if abs(I + bulk - m) > tol_factor * (eI + eb + em) + 1e-12:
        raise ConsistencyError(f"m = {m:.6f} but I + bulk = {I + bulk:.6f} "
                               f"(errors {eI:.1e}, {eb:.1e}, {em:.1e})")
    return {"I": I, "bulk": bulk, "m": m, "error": {"I": eI, "bulk": eb, "m": em}}


# -- complex hyperbolic distance ------------------------------------------------

def chc_metric(x, rho):
    """Metric matrix of dV^2 + e^{4V} rho^-4 W^2 + e^{2V} rho^-2 (dchi^2 + dpsi^2),
    W = dzeta + psi dchi - chi dpsi, in the coordinates (V, zeta, chi, psi)."""
    V, _, chi, psi = x
    a = np.exp(4 * V) / rho ** 4
    b = np.exp(2 * V) / rho ** 2
    w = np.array([0.0, 1.0, psi, -chi])
    g = a * np.outer(w, w)
    g[0, 0] += 1.0
    g[2, 2] += b
    g[3, 3] += b
    return g


def _geodesic_rhs(rho):
    def rhs(s, y):
        V, zeta, chi, psi, dV, dzeta, dchi, dpsi = y
        a = np.exp(4 * V) / rho ** 4
        b = np.exp(2 * V) / rho ** 2
        w = dzeta + psi * dchi - chi * dpsi
        p = a * w
        ddV = 2 * a * w * w + b * (dchi * dchi + dpsi * dpsi)
        ddchi = -2 * dV * dchi - 2 * p * dpsi / b
        ddpsi = -2 * dV * dpsi + 2 * p * dchi / b
        ddzeta = -4 * dV * w - psi * ddchi + chi * ddpsi
        return np.array([dV, dzeta, dchi, dpsi, ddV, ddzeta, ddchi, ddpsi])
    return rhs


def _speed(y, rho):
    V, _, chi, psi, dV, dzeta, dchi, dpsi = y
    w = dzeta + psi * dchi - chi * dpsi
    return np.sqrt(dV ** 2 + np.exp(4 * V) / rho ** 4 * w ** 2
                   + np.exp(2 * V) / rho ** 2 * (dchi ** 2 + dpsi ** 2))


def chc_envelope(p: HarmonicMapPoint, q: HarmonicMapPoint, rho):
    """Length of the coordinate-leg path p -> (V_q, .) -> zeta_q -> chi_q -> psi_q.

    Each leg is a coordinate line, so the sum bounds the distance from above;
    it is the triangle-inequality chain used to control the distance.
    """
    if rho <= 0:
        raise ConfigError("rho must be positive")
    V = q.V
    a = np.exp(2 * V) / rho ** 2
    b = np.exp(V) / rho
    legs = [abs(q.V - p.V),
            a * abs(q.zeta - p.zeta),
            abs(q.chi - p.chi) * np.hypot(a * p.psi, b),
            abs(q.psi - p.psi) * np.hypot(a * q.chi, b)]
    return math.fsum(legs)


@dataclass
class Distance:
    value: float
    envelope: float
    method: str          # "geodesic" or "envelope"
    residual: float = 0.0


def _siegel(x: HarmonicMapPoint, rho):
    # s = rho^2 e^{-2V} = Re w1 - |w2|^2, w2 = chi + i psi, Im w1 = 2 zeta
    return rho * rho * np.exp(-2.0 * x.V), complex(x.chi, x.psi)


def _closed_distance(p, q, rho):
    """The target metric is the Kaehler metric of -log(Re w1 - |w2|^2) on the
    Siegel domain, w1 = s + |w2|^2 + 2 i zeta; cosh^2 d = |Q(p, q)|^2 / (s_p s_q).
    The numerator minus s_p s_q is expanded into non-negative terms."""
    sp, wp = _siegel(p, rho)
    sq, wq = _siegel(q, rho)
    dw2 = abs(wp - wq) ** 2
    im = (p.zeta - q.zeta) - (wp * wq.conjugate()).imag
    num = math.fsum([0.25 * (sp - sq) ** 2, 0.5 * (sp + sq) * dw2, 0.25 * dw2 * dw2, im * im])
    return float(np.arcsinh(math.sqrt(num / (sp * sq))))


def _bvp_distance(p, q, rho, n_nodes=65, tol=1e-10):
    from scipy.integrate import solve_bvp

    a_, b_ = p.array(), q.array()
    s = np.linspace(0.0, 1.0, n_nodes)
    y0 = np.vstack([a_[:, None] + (b_ - a_)[:, None] * s[None, :],
                    np.repeat((b_ - a_)[:, None], n_nodes, axis=1)])

    def bc(ya, yb):
        return np.concatenate([ya[:4] - a_, yb[:4] - b_])

    rhs = _geodesic_rhs(rho)
    with np.errstate(all="ignore"):
        sol = solve_bvp(rhs, bc, s, y0, tol=tol, max_nodes=20000)
        if not sol.success:
            return None, np.inf
        x, w = np.polynomial.legendre.leggauss(64)
        length = 0.5 * float(np.sum(w * _speed(sol.sol(0.5 * (x + 1)), rho)))
    return length, float(np.max(sol.rms_residuals))


def chc_distance(p: HarmonicMapPoint, q: HarmonicMapPoint, rho, method="closed"):
    """Distance between two target points at fixed rho.

    method "closed" uses the Siegel-domain formula; "bvp" solves the geodesic
    boundary-value problem and falls back to the coordinate-leg envelope
    (reported as method "envelope") when the solver fails.
    """
    if rho <= 0:
        raise ConfigError("rho must be positive")
    if tuple(q.array()) < tuple(p.array()):
        p, q = q, p
    env = chc_envelope(p, q, rho)
    if method == "closed":
        return Distance(_closed_distance(p, q, rho), env, "closed")
    if method != "bvp":
        raise ConfigError(f"unknown distance method {method!r}")
    if np.array_equal(p.array(), q.array()):
        return Distance(0.0, 0.0, "geodesic")
    length, res = _bvp_distance(p, q, rho)
    if length is None or length > env * (1 + 1e-9):
        return Distance(env, env, "envelope", res)
    return Distance(length, env, "geodesic", res)


# -- inequalities ------------------------------------------------------------

@dataclass
class InequalityVerdict:
    which: str
    lhs: float
    rhs: float
    margin: float
    inputs: dict
    provenance: str = ""

    @property
    def holds(self):
        return self.margin >= 0

    def certificate(self):
        lines = [f"inequality ({self.which}): {'holds' if self.holds else 'violated'}",
                 f"  lhs    = {self.lhs:.12g}", f"  rhs    = {self.rhs:.12g}",
                 f"  margin = {self.margin:.6e}"]
        for k, v in self.inputs.items():
            lines.append(f"  {k} = {v}")
        if self.provenance:
            lines.append(f"  source: {self.provenance}")
        return "\n".join(lines)


def rigidity_target(J, Q):
    """(Q^2 + sqrt(Q^4 + 4 J^2)) / 2, the value of m^2 at the extreme Kerr-Newman case."""
    return 0.5 * math.fsum([Q * Q, math.sqrt(Q ** 4 + 4 * J * J)])


def check_inequality(which, charges, vacuum=None):
    """Evaluate (a) m^2 >= (Q^2 + sqrt(Q^4 + 4J^2))/2, (b) the n = 4 charged bound
    m >= 27 pi (J1 + J2)^2 / (8 (2m + sqrt3 |Q|)^2) + sqrt3 |Q|, or (c) the n = 4
    vacuum ring bound m^3 >= 27 pi |J2| |J1 - J2| / 4, at the measured values."""
    m = charges.m
    J = tuple(charges.J)
    if m is None or not J:
        raise ConfigError("charge record lacks m or J")
    prov = getattr(charges, "method", "")
    if which == "a":
        if len(J) != 1:
            raise ConfigError("inequality (a) needs a single angular momentum")
        Q2 = math.fsum([charges.Qe ** 2, charges.Qb ** 2])
        lhs = m * m
        rhs = rigidity_target(J[0], math.sqrt(Q2))
        inputs = {"m": m, "J": J[0], "Q": math.sqrt(Q2)}
    elif which == "b":
        if len(J) != 2:
            raise ConfigError("inequality (b) needs two angular momenta")
        if charges.Qe is None:
            raise ConfigError("inequality (b) needs the electric charge")
        Q = abs(charges.Qe)
        s3 = math.sqrt(3.0)
        lhs = m
        rhs = math.fsum([27 * math.pi / 8 * (J[0] + J[1]) ** 2 / (2 * m + s3 * Q) ** 2, s3 * Q])
        inputs = {"m": m, "J1": J[0], "J2": J[1], "Q": Q}
    elif which == "c":
        if len(J) != 2:
            raise ConfigError("inequality (c) needs two angular momenta")
        if vacuum is None:
            raise ConfigError("inequality (c) needs the vacuum flag")
        if not vacuum:
            raise ConfigError("inequality (c) applies to vacuum data only")
        lhs = m ** 3
        rhs = 27 * math.pi / 4 * abs(J[1]) * abs(J[0] - J[1])
        inputs = {"m": m, "J1": J[0], "J2": J[1]}
    else:
        raise ConfigError(f"unknown inequality {which!r}")
    return InequalityVerdict(which, lhs, rhs, math.fsum([lhs, -rhs]), inputs, prov)
