"""Corners: two (t - phi) data sets glued across an axisymmetric sphere Sigma.

Sigma is a curve r = r0 (1 + amp cos(k theta)) in the (rho, z) half plane.
The collar is built from geodesics of the quotient metric
q = e^{2(alpha - U)} (d rho^2 + d z^2) leaving Sigma orthogonally, so that
near Sigma

    g = dt^2 + q_theta dtheta^2 + Lambda dphi^2,   Lambda = e^{-2U} rho^2.

Collar fields are sampled on Chebyshev-Lobatto nodes in t on each side and
kept as Chebyshev series, which gives t-derivatives of any order.  Only
n = 3 is supported here.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import chebyshev as cheb
from scipy.integrate import solve_ivp
from scipy.interpolate import RectBivariateSpline

from .brill import BrillData, mean_curvature
from .errors import CollarError, ConfigError, GlueError
from .potentials import PotentialSet
from .tphi import TPhiData

POT_NAMES = ("zeta", "chi", "psi")
COLLAR_NAMES = ("a", "Lam") + POT_NAMES


@dataclass(frozen=True)
class Surface:
    r0: float
    amp: float = 0.0
    k: int = 0

    def radius(self, theta):
        return self.r0 * (1.0 + self.amp * np.cos(self.k * theta))

    def point(self, theta):
        r = self.radius(theta)
        return r * np.sin(theta), r * np.cos(theta)

    def normal(self, theta):
        """Flat outward unit normal (n_rho, n_z)."""
        r = self.radius(theta)
        dr = -self.r0 * self.amp * self.k * np.sin(self.k * theta)
        tr = dr * np.sin(theta) + r * np.cos(theta)
        tz = dr * np.cos(theta) - r * np.sin(theta)
        nrm = np.hypot(tr, tz)
        return -tz / nrm, tr / nrm

    @property
    def is_sphere(self):
        return self.amp == 0.0 or self.k == 0


class SideEvaluator:
    """U, alpha and the potentials of one side at arbitrary (rho, z).

    Uses the data's exact callable for every quantity it provides and
    bicubic splines of the grid arrays otherwise.
    """

    def __init__(self, td: TPhiData):
        self.td = td
        data = td.data
        if data.n != 3:
            raise ConfigError("corner smoothing is implemented for n = 3")
        self._splines = {}
        g = data.grid
        arrays = {"U": data.U, "alpha": data.alpha, "zeta": td.pots.zeta[0],
                  "chi": td.pots.chi, "psi": td.pots.psi[0]}
        self._arrays = arrays
        self._grid = g

    def _spline(self, name):
        if name not in self._splines:
            g = self._grid
            self._splines[name] = RectBivariateSpline(g.rho, g.z, self._arrays[name], kx=3, ky=3)
        return self._splines[name]

    def __call__(self, rho, z, names=("U", "alpha")):
        rho = np.asarray(rho, float)
        z = np.asarray(z, float)
        ex = self.td.data.exact(rho, z) if self.td.data.exact is not None else {}
        out = {}
        for name in names:
            if name in ex:
                out[name] = np.broadcast_to(np.asarray(ex[name], float), rho.shape).copy()
            else:
                out[name] = self._spline(name).ev(np.abs(rho), z)
        return out

    def w_grad(self, rho, z, step=1e-3):
        """w = alpha - U and its flat gradient by 4th-order central differences."""
        def w(r_, z_):
            v = self(r_, z_)
            return v["alpha"] - v["U"]
        w0 = w(rho, z)
        c = np.array([1.0, -8.0, 8.0, -1.0]) / (12 * step)
        off = np.array([-2, -1, 1, 2]) * step
        gr = sum(ci * w(rho + o, z) for ci, o in zip(c, off))
        gz = sum(ci * w(rho, z + o) for ci, o in zip(c, off))
        return w0, gr, gz


@dataclass(frozen=True)
class CornerData:
    inner: TPhiData
    outer: TPhiData
    surface: Surface
    theta: np.ndarray          # stations for H
    H_minus: np.ndarray
    H_plus: np.ndarray
    shifts: dict = field(default_factory=dict)
    report: dict = field(default_factory=dict)

    @property
    def jump(self):
        return self.H_minus - self.H_plus


def _trace(ev, surface, theta, names):
    rho, z = surface.point(theta)
    return ev(rho, z, names)


def glue(inner: TPhiData, outer: TPhiData, surface: Surface, n_theta: int = 64,
         metric_tol: float = 1e-8, pot_tol: float = 1e-8, h=None) -> CornerData:
    """Glue along Sigma, checking the induced metrics and re-anchoring the outer potentials.

    Raises GlueError when q_theta or Lambda differ on Sigma, or when a
    potential trace differs by more than a constant.
    """
    ev_in, ev_out = SideEvaluator(inner), SideEvaluator(outer)
    th = (np.arange(n_theta) + 0.5) * np.pi / n_theta
    names = ("U", "alpha") + POT_NAMES
    ti = _trace(ev_in, surface, th, names)
    to = _trace(ev_out, surface, th, names)
    rep = {}
    for key in ("U", "alpha"):
        d = np.abs(ti[key] - to[key])
        rep[f"metric_{key}"] = float(d.max())
        if d.max() > metric_tol:
            j = int(np.argmax(d))
            rho, z = surface.point(th[j])
            raise GlueError(f"induced metric mismatch in {key}: {d.max():.3e}",
                            location=(float(rho), float(z)))
    shifts = {}
    for key in POT_NAMES:
        diff = ti[key] - to[key]
        c = float(np.mean(diff))
        shifts[key] = c
        resid = np.abs(diff - c)
        rep[f"trace_{key}"] = float(resid.max())
        if resid.max() > pot_tol:
            j = int(np.argmax(resid))
            rho, z = surface.point(th[j])
            raise GlueError(f"potential {key} traces differ by {resid.max():.3e}",
                            location=(float(rho), float(z)))
    if any(shifts.values()):
        p = outer.pots
        outer = TPhiData(outer.data, PotentialSet(p.zeta + shifts["zeta"], p.chi + shifts["chi"],
                                                  p.psi + shifts["psi"]),
                         outer.fields, outer.mu_bar, outer.mu)
    if not surface.is_sphere:
        raise ConfigError("mean curvature jump is computed for coordinate spheres only")
    if h is None and inner.data.exact is not None and outer.data.exact is not None:
        h = 1e-4 * surface.r0
    theta, hm = mean_curvature(inner.data, surface.r0, "inner", h=h)
    _, hp = mean_curvature(outer.data, surface.r0, "outer", h=h)
    return CornerData(inner, outer, surface, theta, hm, hp, shifts, rep)


# -- collar ----------------------------------------------------------------

def _geodesic_rhs(ev):
    def rhs(t, y):
        rho, z, vr, vz = y
        _, gr, gz = ev.w_grad(np.array([rho]), np.array([z]))
        gr, gz = gr[0], gz[0]
        gv = gr * vr + gz * vz
        v2 = vr * vr + vz * vz
        return [vr, vz, -2 * gv * vr + v2 * gr, -2 * gv * vz + v2 * gz]
    return rhs


def _shoot(ev, surface, theta0, t_nodes, rtol):
    rho0, z0 = surface.point(np.array([theta0]))
    nr, nz = surface.normal(np.array([theta0]))
    w0, _, _ = ev.w_grad(rho0, z0)
    s = np.exp(-w0[0])
    y0 = [rho0[0], z0[0], s * nr[0], s * nz[0]]
    sol = solve_ivp(_geodesic_rhs(ev), (0.0, t_nodes[-1]), y0, t_eval=t_nodes,
                    rtol=rtol, atol=rtol * 1e-2, method="DOP853")
    if not sol.success:
        raise CollarError(f"geodesic integration failed at theta={theta0:.4f}: {sol.message}")
    return sol.y


def cheb_nodes(n, t_end):
    """Chebyshev-Lobatto nodes on [0, t_end] (t_end may be negative), starting at 0."""
    x = np.cos(np.pi * np.arange(n) / (n - 1))[::-1]   # -1 .. 1
    return 0.5 * t_end * (x + 1.0)


@dataclass
class CollarSide:
    """Chebyshev series in t of the collar fields of one side."""

    t_end: float
    coef: np.ndarray           # (deg + 1, n_fields, n_theta)

    def _x(self, t):
        return 2.0 * np.asarray(t, float) / self.t_end - 1.0

    def __call__(self, t):
        """(value, d/dt, d^2/dt^2), each shaped (len(t), n_fields, n_theta)."""
        x = self._x(np.atleast_1d(t))
        scale = 2.0 / self.t_end
        c0 = self.coef
        c1 = cheb.chebder(c0) * scale
        c2 = cheb.chebder(c0, 2) * scale * scale
        return tuple(np.moveaxis(cheb.chebval(x, c), -1, 0) for c in (c0, c1, c2))


@dataclass
class CollarChart:
    eps: float
    surface: Surface
    theta: np.ndarray
    minus: CollarSide
    plus: CollarSide
    names: tuple = COLLAR_NAMES
    jacobian_min: float = np.inf
    offdiag_max: float = 0.0
    radial: bool = False
    nodes: dict = field(default_factory=dict)

    def index(self, name):
        return self.names.index(name)

    def sample(self, t):
        t = np.atleast_1d(np.asarray(t, float))
        out = [np.empty((t.size, len(self.names), self.theta.size)) for _ in range(3)]
        for mask, side in ((t < 0, self.minus), (t >= 0, self.plus)):
            if mask.any():
                for o, v in zip(out, side(t[mask])):
                    o[mask] = v
        return tuple(out)

    def uniform(self, n_t=257):
        t = np.linspace(-2 * self.eps, 2 * self.eps, n_t)
        return t, self.sample(t)[0]


def collar(corner: CornerData, eps: float, n_theta: int = 64, n_cheb: int = 33,
           rtol: float = 1e-11, dtheta: float = 1e-3) -> CollarChart:
    """Geodesic collar of width 2 eps on each side of Sigma.

    Raises CollarError if the Jacobian d(rho, z)/d(t, theta) changes sign
    (focal points) or a geodesic leaves the half plane.
    """
    if eps <= 0:
        raise ConfigError("eps must be positive")
    surf = corner.surface
    th = (np.arange(n_theta) + 0.5) * np.pi / n_theta
    sides = {}
    jac_min = np.inf
    off_max = 0.0
    radial = True
    nodes = {}
    for key, td, t_end in (("minus", corner.inner, -2 * eps), ("plus", corner.outer, 2 * eps)):
        ev = SideEvaluator(td)
        tn = cheb_nodes(n_cheb, t_end)
        ys = np.empty((n_theta, 4, n_cheb))
        dx = np.empty((n_theta, 2, n_cheb))
        stencil = np.array([1.0, -8.0, 8.0, -1.0]) / (12 * dtheta)
        offs = np.array([-2, -1, 1, 2]) * dtheta
        for j, t0 in enumerate(th):
            ys[j] = _shoot(ev, surf, t0, tn, rtol)
            acc = 0.0
            for c, o in zip(stencil, offs):
                acc = acc + c * _shoot(ev, surf, t0 + o, tn, rtol)[:2]
            dx[j] = acc
        rho, z = ys[:, 0], ys[:, 1]
        if np.any(rho <= 0):
            raise CollarError("collar geodesic crossed the axis", location=None)
        vr, vz = ys[:, 2], ys[:, 3]
        jac = vr * dx[:, 1] - vz * dx[:, 0]
        # orientation (t, theta) against (rho, z) is negative for a sphere
        jac = -jac
        if np.any(jac <= 0):
            j, k = np.unravel_index(int(np.argmin(jac)), jac.shape)
            raise CollarError(f"collar Jacobian vanishes at t={tn[k]:.4f}, theta={th[j]:.4f}",
                              location=(float(rho[j, k]), float(z[j, k])))
        vals = ev(rho, z, ("U", "alpha") + POT_NAMES)
        w = vals["alpha"] - vals["U"]
        e2w = np.exp(2 * w)
        a = e2w * (dx[:, 0] ** 2 + dx[:, 1] ** 2)
        off = e2w * (vr * dx[:, 0] + vz * dx[:, 1])
        unit = e2w * (vr * vr + vz * vz)
        jac_min = min(jac_min, float((jac / np.sqrt(unit)).min()))
        off_max = max(off_max, float(np.abs(off / np.sqrt(a)).max()), float(np.abs(unit - 1).max()))
        Lam = np.exp(-2 * vals["U"]) * rho ** 2
        stack = np.stack([a, Lam, vals["zeta"], vals["chi"], vals["psi"]])   # (f, theta, t)
        y = np.moveaxis(stack, -1, 0)                                         # (t, f, theta)
        x = 2.0 * tn / t_end - 1.0
        coef = cheb.chebfit(x, y.reshape(n_cheb, -1), n_cheb - 1).reshape((n_cheb,) + y.shape[1:])
        sides[key] = CollarSide(t_end, coef)
        r = np.hypot(rho, z)
        ang = np.arctan2(rho, z)
        radial &= bool(np.abs(ang - th[:, None]).max() < 1e-8)
        nodes[key] = {"t": tn, "rho": rho, "z": z, "r": r}
    return CollarChart(eps, surf, th, sides["minus"], sides["plus"], jacobian_min=jac_min,
                       offdiag_max=off_max, radial=radial, nodes=nodes)


# -- fixtures ----------------------------------------------------------------

def radial_fill(outer: BrillData, r0: float, slope: float = 0.0) -> BrillData:
    """Regular inner data matching ``outer`` on the sphere r = r0.

    U_in = U_out(r0) + slope (r^2 - r0^2) / (2 r0) for r < 2 r0, alpha_in = alpha_out(r0).
    slope = 0 is flat space rescaled to the induced sphere; slope = -d_r U_out
    doubles the mean-curvature jump of the flat fill.  Requires U_out and
    alpha_out to be constant on the sphere.
    """
    if outer.exact is None:
        raise ConfigError("radial_fill needs data with an exact callable")
    th = np.linspace(0.05, np.pi - 0.05, 17)
    ex = outer.exact(r0 * np.sin(th), r0 * np.cos(th))
    if np.ptp(ex["U"]) > 1e-12 or np.ptp(ex["alpha"]) > 1e-12:
        raise ConfigError("outer data is not spherically symmetric on the gluing sphere")
    U0 = float(ex["U"][0])
    a0 = float(ex["alpha"][0])
    grid = outer.grid

    def u_of(rho, z):
        # the fill is only used for r < r0 + eps; capping r at 2 r0 keeps e^U finite far out
        r2 = np.minimum(np.asarray(rho, float) ** 2 + np.asarray(z, float) ** 2, 4 * r0 * r0)
        return U0 + slope * (r2 - r0 * r0) / (2 * r0)

    def exact(rho, z):
        u = u_of(rho, z)
        return {"U": u, "alpha": np.full(np.shape(u), a0)}

    R, Z = grid.mesh()
    m = outer.n - 2
    return BrillData(grid, outer.n, u_of(R, Z), np.full(grid.shape, a0),
                     np.zeros((m, m) + grid.shape), np.zeros((m, 2) + grid.shape),
                     exact=exact, label=f"fill(r0={r0},slope={slope:g})")


def vacuum_side(data: BrillData, pots: PotentialSet = None) -> TPhiData:
    """TPhiData of a seed, with zero potentials unless given."""
    from .brill import Fields
    from .potentials import reconstruct_fields
    from .tphi import energy_density

    if pots is None:
        pots = PotentialSet.zeros(data)
        fields = Fields.zeros(data)
    else:
        fields = reconstruct_fields(data, pots)
    mu_bar, mu = energy_density(data, fields)
    return TPhiData(data, pots, fields, mu_bar, mu)
