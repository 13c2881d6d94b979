"""Conformal correction of the negative part of the smoothed energy density.

On a metric dt^2 + a dtheta^2 + Lam dphi^2 (n = 3) solve

    Lap u + c |mu_-| u = 0,   c = 16 pi c_n = 2 pi,   u -> 1 at infinity,

so that u >= 1 and g~ = u^4 g has mu~ >= 0.  With u = 1 + A/r + ... the
mass shifts by 2A.  The solver is a cell-centred finite-volume scheme on a
(t, theta) grid: the axis and a regular centre are zero-area faces, the
outer face carries the Robin condition d_r u = -(u - 1)/r.  It solves for
v = u - 1 so the tiny corrections of small delta keep full relative accuracy.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.integrate import cumulative_trapezoid, solve_ivp
from scipy.interpolate import CubicSpline

from .errors import ConfigError, SolverError
from .smoothing import SmoothedCollar, piecewise_gauss

C3 = 2.0 * np.pi          # 16 pi c_n for n = 3


def c_n(n):
    return (n - 2) / (4.0 * (n - 1))


@dataclass
class PolarProblem:
    """Discrete data of the conformal problem on a (t, theta) cell grid.

    Arrays ending in _c live on cell centres (n_t, n_theta); sg_t are
    sqrt(a Lam) on t-faces (n_t + 1, n_theta); th_face the coefficient
    sqrt(Lam / a) on theta-faces (n_t, n_theta + 1).
    """

    t: np.ndarray              # faces
    theta: np.ndarray          # faces
    sg_c: np.ndarray
    sg_t: np.ndarray
    th_face: np.ndarray
    coef: np.ndarray           # cell average of c |mu_-|
    r_outer: float
    dt_dr_outer: np.ndarray    # dt/dr on the outer face, per theta
    r_c: np.ndarray            # areal-type radius of cell centres (1-d), for fits
    inner_bc: str = "regular"
    info: dict = field(default_factory=dict)

    @property
    def shape(self):
        return self.sg_c.shape

    @property
    def t_c(self):
        return 0.5 * (self.t[1:] + self.t[:-1])

    @property
    def theta_c(self):
        return 0.5 * (self.theta[1:] + self.theta[:-1])


@dataclass
class ConformalSolution:
    problem: PolarProblem
    v: np.ndarray              # u - 1 on cells
    A_volume: float
    A_energy: float
    A_fit: float
    history: list

    @property
    def u(self):
        return 1.0 + self.v

    @property
    def mass_shift(self):
        return 2.0 * self.A_volume


def _theta_weights(p):
    """int sin over each theta cell divided by sin at its centre, times the width.

    The area factors carry sin(theta), so this makes the discrete sphere area exact.
    """
    lo, hi = p.theta[:-1], p.theta[1:]
    return (np.cos(lo) - np.cos(hi)) / np.sin(p.theta_c)


def _assemble(p: PolarProblem):
    nt, nth = p.shape
    dt = np.diff(p.t)
    dth = _theta_weights(p)
    tc = p.t_c
    thc = p.theta_c
    idx = np.arange(nt * nth).reshape(nt, nth)
    rows, cols, vals = [], [], []
    diag = np.zeros((nt, nth))

    def add(i, j, v):
        rows.append(i.ravel())
        cols.append(j.ravel())
        vals.append(v.ravel())

    # t-faces between cells
    h = tc[1:] - tc[:-1]
    w = p.sg_t[1:-1] * dth[None, :] / h[:, None]
    add(idx[:-1], idx[1:], w)
    add(idx[1:], idx[:-1], w)
    diag[:-1] -= w
    diag[1:] -= w
    # inner boundary
    if p.inner_bc == "dirichlet":
        d0 = tc[0] - p.t[0]
        diag[0] -= p.sg_t[0] * dth / d0
    elif p.inner_bc not in ("regular", "neumann"):
        raise ConfigError(f"unknown inner boundary condition {p.inner_bc}")
    # outer Robin face: d_t v = -k v,  k = (dr/dt) / r
    kap = 1.0 / (p.dt_dr_outer * p.r_outer)
    d1 = p.t[-1] - tc[-1]
    # v_face = v_N / (1 + k d1), flux = sg (v_face - v_N)/d1
    fac = -kap / (1.0 + kap * d1)
    diag[-1] += p.sg_t[-1] * dth * fac
    # theta faces (poles carry zero area)
    hth = thc[1:] - thc[:-1]
    w = p.th_face[:, 1:-1] * dt[:, None] / hth[None, :]
    add(idx[:, :-1], idx[:, 1:], w)
    add(idx[:, 1:], idx[:, :-1], w)
    diag[:, :-1] -= w
    diag[:, 1:] -= w
    vol = p.sg_c * dt[:, None] * dth[None, :]
    diag += p.coef * vol
    add(idx, idx, diag)
    A = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(nt * nth, nt * nth))
    rhs = -(p.coef * vol).ravel()
    return A, rhs, vol


def solve(p: PolarProblem, rtol=1e-10, maxiter=400, direct=False) -> ConformalSolution:
    """Solve for v = u - 1; raises SolverError when the Krylov iteration stalls."""
    A, rhs, vol = _assemble(p)
    history = []
    scale = float(np.abs(rhs).max())
    if scale == 0.0:
        v = np.zeros(p.shape)
        return ConformalSolution(p, v, 0.0, 0.0, 0.0, history)
    if direct:
        x = spla.spsolve(A.tocsc(), rhs)
    else:
        ilu = spla.spilu(A.tocsc(), drop_tol=1e-6, fill_factor=20)
        M = spla.LinearOperator(A.shape, ilu.solve)
        bn = np.linalg.norm(rhs)

        def cb(xk):
            history.append(float(np.linalg.norm(A @ xk - rhs) / bn))

        x, info = spla.bicgstab(A, rhs, M=M, rtol=rtol, atol=0.0, maxiter=maxiter, callback=cb)
        res = float(np.linalg.norm(A @ x - rhs) / bn)
        history.append(res)
        if info != 0 or res > 10 * rtol:
            raise SolverError(f"bicgstab did not converge (info={info}, residual {res:.2e})",
                              history)
    v = x.reshape(p.shape)
    if np.any(1.0 + v <= 0):
        raise SolverError("conformal factor is not positive", history)
    return ConformalSolution(p, v, *_mass_shift(p, v), history)


def _mass_shift(p: PolarProblem, v):
    """A by the volume identity, the energy identity and a far-field fit."""
    dt = np.diff(p.t)
    dth = _theta_weights(p)
    vol = p.sg_c * dt[:, None] * dth[None, :] * 2 * np.pi
    u = 1.0 + v
    A_vol = float(np.sum(p.coef * u * vol)) / (4 * np.pi)
    # energy form (1/4 pi) int (-|grad u|^2 + c|mu_-| u^2) plus the Robin boundary flux
    tc, thc = p.t_c, p.theta_c
    gt = np.diff(v, axis=0) / np.diff(tc)[:, None]
    e_t = np.sum(p.sg_t[1:-1] * gt ** 2 * dth[None, :] * (tc[1:] - tc[:-1])[:, None])
    gth = np.diff(v, axis=1) / np.diff(thc)[None, :]
    e_th = np.sum(p.th_face[:, 1:-1] * gth ** 2 * dt[:, None] * np.diff(thc)[None, :])
    grad2 = 2 * np.pi * (e_t + e_th)
    A_en = (-grad2 + float(np.sum(p.coef * u * u * vol))) / (4 * np.pi)
    # exterior r > R: -int |grad(A/r)|^2 = -4 pi A^2 / R
    A_en -= A_vol * A_vol / p.r_outer
    A_en = A_en if p.inner_bc != "dirichlet" else float("nan")
    A_fit = _far_fit(p, v)
    return A_vol, float(A_en), A_fit


def _far_fit(p: PolarProblem, v, lo=0.25, hi=0.75):
    """Least-squares fit of the theta-averaged v = A/r + B/r^2 on r in [lo, hi] R."""
    dth = np.diff(p.theta)
    w = np.sin(p.theta_c) * dth
    vbar = (v * w).sum(axis=1) / w.sum()
    r = p.r_c
    sel = (r >= lo * p.r_outer) & (r <= hi * p.r_outer)
    if sel.sum() < 3:
        return float("nan")
    X = np.stack([1 / r[sel], 1 / r[sel] ** 2], axis=1)
    coef, *_ = np.linalg.lstsq(X, vbar[sel], rcond=None)
    return float(coef[0])


# -- problem builders --------------------------------------------------------

def graded_faces(t_lo, t_hi, core, h_core, ratio=1.08, h_cap=None):
    """Faces uniform with spacing h_core on [-core, core], then geometric outward.

    h_cap(t) bounds the spacing away from the core.
    """
    if not t_lo < -core < core < t_hi:
        raise ConfigError("core must lie inside the domain")
    n_core = max(2, int(np.ceil(2 * core / h_core)))
    faces = list(np.linspace(-core, core, n_core + 1))

    def grow(start, end, sign):
        out = []
        t = start
        h = (2 * core) / n_core
        while sign * (end - t) > 0:
            h = h * ratio
            if h_cap is not None:
                h = min(h, h_cap(t))
            t = t + sign * h
            out.append(t)
        out[-1] = end
        if len(out) > 1 and abs(out[-1] - out[-2]) < 0.3 * h:
            out.pop(-2)
        return out

    up = grow(core, t_hi, 1.0)
    down = grow(-core, t_lo, -1.0)
    return np.array(down[::-1] + faces + up)


def theta_faces(n_theta):
    return np.linspace(0.0, np.pi, n_theta + 1)


def flat_ball_problem(q, radius=1.0, r_outer=40.0, n_theta=16, h_core=None):
    """Flat space with c|mu_-| = q on the ball r < radius."""
    h_core = h_core or radius / 80
    n_in = int(np.ceil(radius / h_core))
    t = list(np.linspace(0.0, radius, n_in + 1))
    h = radius / n_in
    while t[-1] < r_outer:
        h = min(h * 1.04, max(0.02, 0.02 * t[-1]))
        t.append(t[-1] + h)
    t[-1] = r_outer
    t = np.array(t)
    th = theta_faces(n_theta)
    tc = 0.5 * (t[1:] + t[:-1])
    thc = 0.5 * (th[1:] + th[:-1])
    sg_c = tc[:, None] ** 2 * np.sin(thc)[None, :]
    sg_t = t[:, None] ** 2 * np.sin(thc)[None, :]
    th_face = np.broadcast_to(np.sin(th)[None, :], (tc.size, th.size)).copy()
    th_face[:, [0, -1]] = 0.0
    # exact cell fraction of the ball
    lo, hi = t[:-1], t[1:]
    frac = np.clip((np.minimum(hi, radius) ** 3 - lo ** 3) / (hi ** 3 - lo ** 3), 0, 1)
    coef = q * frac[:, None] * np.ones_like(sg_c)
    return PolarProblem(t, th, sg_c, sg_t, th_face, coef, r_outer,
                        np.ones(n_theta), tc, "regular",
                        {"q": q, "radius": radius, "t_of_r": lambda r: np.asarray(r, float)})


def flat_ball_oracle(q, radius=1.0):
    """A for the flat ball problem by shooting the radial ODE (independent of the FV solver).

    u'' + 2u'/r + q u = 0 inside, regular at 0; outside u = 1 + A/r.
    """
    def rhs(r, y):
        return [y[1], -2 * y[1] / r - q * y[0]]
    r0 = 1e-6
    sol = solve_ivp(rhs, (r0, radius), [1.0, -q * r0 / 3], rtol=1e-12, atol=1e-14)
    u1, du1 = sol.y[:, -1]
    # match u = s * y and 1 + A/r at the ball surface
    # s u1 = 1 + A/R, s du1 = -A/R^2
    s = 1.0 / (u1 + radius * du1)
    return float(-s * du1 * radius * radius)


def flat_ball_exact(q, radius=1.0):
    k = np.sqrt(q) * radius
    return float(radius * (np.tan(k) / k - 1.0))


@dataclass
class RadialMap:
    """t(r) on one side of a radial collar, t = int_{r0}^{r} e^{w(r')} dr'."""

    r: np.ndarray
    t: np.ndarray

    def r_of_t(self, t):
        return CubicSpline(self.t, self.r)(t) if self.t[0] < self.t[-1] else \
            CubicSpline(self.t[::-1], self.r[::-1])(t)


def _side_map(ev, r0, r_end, n=4001):
    r = np.linspace(r0, r_end, n)
    val = ev(r, np.zeros_like(r))          # equatorial plane: rho = r, z = 0
    w = val["alpha"] - val["U"]
    t = cumulative_trapezoid(np.exp(w), r, initial=0.0)
    return RadialMap(r, t)


def smoothed_problem(sd, r_outer=None, n_core=96, ratio=1.08, n_gauss=4, inner_bc="regular",
                     inner_radius=0.0):
    """The conformal problem of a smoothed radial corner.

    ``sd`` is a SmoothedData; cells with |t| < delta/2 get the cell average
    of c |mu_bar_delta_-|, all other cells zero.
    """
    from .corner import SideEvaluator

    chart = sd.chart
    if not chart.radial:
        raise ConfigError("the conformal solve needs a radial collar")
    corner = sd.corner
    r0 = corner.surface.r0
    ev_in = SideEvaluator(corner.inner)
    ev_out = SideEvaluator(corner.outer)
    grid = corner.outer.data.grid
    r_outer = r_outer or 0.9 * grid.r_outer
    delta = sd.delta
    m_in = _side_map(ev_in, r0, max(inner_radius, 1e-9))
    m_out = _side_map(ev_out, r0, r_outer, 8001)
    t_lo, t_hi = m_in.t[-1], m_out.t[-1]
    eps = chart.eps

    def cap(t):
        return max(delta / 8, 0.05 * abs(t), 0.02)
    t = graded_faces(t_lo, t_hi, delta / 2, delta / n_core, ratio, cap)
    th = theta_faces(chart.theta.size)
    if not np.allclose(0.5 * (th[1:] + th[:-1]), chart.theta):
        raise ConfigError("theta stations of the collar and the conformal grid differ")
    sc = SmoothedCollar(chart, delta)

    def metric(tt):
        """(a, Lam) at t values, shape (len, n_theta)."""
        tt = np.atleast_1d(tt)
        a = np.empty((tt.size, chart.theta.size))
        L = np.empty_like(a)
        inc = np.abs(tt) < 2 * eps
        if inc.any():
            v = sc.raw(tt[inc])[0]
            a[inc] = v[:, chart.index("a")]
            L[inc] = v[:, chart.index("Lam")]
        for mask, mp, ev in ((~inc & (tt < 0), m_in, ev_in), (~inc & (tt >= 0), m_out, ev_out)):
            if mask.any():
                r = mp.r_of_t(tt[mask])
                rho = r[:, None] * np.sin(chart.theta)[None, :]
                z = r[:, None] * np.cos(chart.theta)[None, :]
                val = ev(rho, z)
                a[mask] = np.exp(2 * (val["alpha"] - val["U"])) * r[:, None] ** 2
                L[mask] = np.exp(-2 * val["U"]) * rho ** 2
        return a, L

    tc = 0.5 * (t[1:] + t[:-1])
    a_c, L_c = metric(tc)
    a_f, L_f = metric(t)
    sg_c = np.sqrt(a_c * L_c)
    sg_t = np.sqrt(a_f * L_f)
    if inner_bc == "regular" and inner_radius == 0.0:
        sg_t[0] = 0.0
    ratio_c = np.sqrt(L_c / a_c)
    th_face = np.zeros((tc.size, th.size))
    th_face[:, 1:-1] = 0.5 * (ratio_c[:, 1:] + ratio_c[:, :-1])
    coef = np.zeros_like(sg_c)
    inside = np.flatnonzero(np.abs(tc) < delta / 2)
    if inside.size:
        tq, wq = piecewise_gauss(t[inside[0]:inside[-1] + 2], n_gauss)
        g = sc.geometry(tq)
        mu_minus = np.minimum(g["mu_bar"], 0.0)
        sg_q = np.sqrt(g["a"] * g["Lam"])
        cell = np.repeat(inside, n_gauss)
        num = np.zeros((tc.size, th.size - 1))
        den = np.zeros_like(num)
        np.add.at(num, cell, (wq[:, None] * C3 * np.abs(mu_minus) * sg_q))
        np.add.at(den, cell, (wq[:, None] * sg_q))
        coef[inside] = num[inside] / den[inside]
    r_c = np.where(tc < 0, m_in.r_of_t(np.minimum(tc, 0)), m_out.r_of_t(np.maximum(tc, 0)))
    val = ev_out(np.array([r_outer]), np.array([0.0]))
    dtdr = np.full(chart.theta.size, float(np.exp(val["alpha"][0] - val["U"][0])))
    def t_of_r(r):
        r = np.asarray(r, float)
        return np.where(r >= r0, np.interp(r, m_out.r, m_out.t),
                        np.interp(r, m_in.r[::-1], m_in.t[::-1]))

    return PolarProblem(t, th, sg_c, sg_t, th_face, coef, r_outer, dtdr, r_c, inner_bc,
                        {"delta": delta, "t_lo": t_lo, "t_hi": t_hi, "t_of_r": t_of_r})


# -- transformed data ----------------------------------------------------------

def transformed_density(mu_plus, k2, e2, b2, u, n=3):
    """mu~ = u^{4/(2-n)} (mu_+ + [(1 - u^{-8}) |k|^2 + 2(1 - u^{-4})(|E|^2 + |B|^2)] / 16 pi) for n = 3.

    Norms are those of the untransformed data; k~ = u^{-2} k, E~ = u^{-2} E.
    """
    if n != 3:
        raise ConfigError("transformed_density is implemented for n = 3")
    return u ** -4 * (mu_plus + ((1 - u ** -8) * k2 + 2 * (1 - u ** -4) * (e2 + b2)) / (16 * np.pi))


def transformed_density_direct(mu_bar, mu_minus, k2, e2, b2, u, R_over_u5=None):
    """mu~ from 16 pi mu~ = R~ - |k~|^2 - 2|E~|^2 - 2|B~|^2 with R~ = u^-5(-8 Lap u + R u)."""
    # Lap u = -2 pi |mu_-| u, R = 16 pi mu_bar + |k|^2 + 2|E|^2 + 2|B|^2
    R = 16 * np.pi * mu_bar + k2 + 2 * e2 + 2 * b2
    lap = -C3 * np.abs(mu_minus) * u
    Rt = u ** -5 * (-8 * lap + R * u)
    return (Rt - u ** -12 * k2 - 2 * u ** -8 * (e2 + b2)) / (16 * np.pi)


@dataclass
class ConformalData:
    """The transformed data g~ = u^4 g, k~ = u^-2 k, E~ = u^-2 E, B~ = u^-2 B."""

    solution: ConformalSolution
    smoothed: object = None
    t_core: np.ndarray = None          # cell centres with |t| < delta/2
    mu_tilde: np.ndarray = None        # expansion form on (t_core, theta)
    mu_tilde_direct: np.ndarray = None # from R~ of the conformal metric
    mu_bar: np.ndarray = None

    @property
    def u(self):
        return self.solution.u

    @property
    def min_u(self):
        return float(self.u.min())

    @property
    def min_mu_tilde(self):
        return float(self.mu_tilde.min()) if self.mu_tilde is not None and self.mu_tilde.size else 0.0

    def u_at(self, r, theta):
        """u at points (r, theta), continued as 1 + c(theta)/r beyond the solver domain."""
        from scipy.interpolate import RegularGridInterpolator

        p = self.solution.problem
        t_of_r = p.info.get("t_of_r")
        if t_of_r is None:
            raise ConfigError("problem carries no radial map")
        r = np.asarray(r, float)
        th = np.clip(np.asarray(theta, float), p.theta_c[0], p.theta_c[-1])
        tc = p.t_c
        tt = np.clip(t_of_r(r), tc[0], tc[-1])
        f = RegularGridInterpolator((tc, p.theta_c), self.solution.v, method="linear")
        v = f(np.stack([tt.ravel(), th.ravel()], axis=1)).reshape(r.shape)
        # beyond the last cell continue with the Robin closure d_r v = -v / r
        r_edge = p.r_c[-1]
        edge = f(np.stack([np.full(r.size, tc[-1]), th.ravel()], axis=1)).reshape(r.shape)
        far = r > r_edge
        v = np.where(far, edge * r_edge / np.maximum(r, r_edge), v)
        return 1.0 + v

    def on_grid(self, data, fields=None):
        """Transformed BrillData (and frame Fields) on the grid of ``data``.

        Frame components scale as k~ = u^-6 k and E~ = u^-4 E, B~ = u^-4 B.
        """
        from dataclasses import replace

        r, th = data.grid.polar()
        u = self.u_at(r, th)
        out = replace(data, U=data.U - 2.0 * np.log(u), exact=None,
                      label=data.label + "+conformal")
        if fields is None:
            return out, u
        from .brill import Fields

        return out, Fields(fields.k * u ** -6, fields.E * u ** -4, fields.B * u ** -4), u


def transform(sd, sol: ConformalSolution, n_gauss=None):
    """Apply the conformal factor to smoothed data; mu~ is evaluated on the core cells.

    With ``sd`` None (model problems) only the factor itself is carried.
    """
    if np.any(sol.u < 1.0 - 1e-8):
        raise SolverError(f"u < 1 (min {sol.u.min():.3e}); the transform assumes u >= 1",
                          sol.history)
    if sd is None:
        return ConformalData(sol)
    p = sol.problem
    tc = p.t_c
    core = np.abs(tc) < sd.delta / 2
    sc = SmoothedCollar(sd.chart, sd.delta)
    g = sc.geometry(tc[core])
    u = sol.u[core]
    mu_bar = g["mu_bar"]
    mu_minus = np.minimum(mu_bar, 0.0)
    mu_plus = np.maximum(mu_bar, 0.0)
    mt = transformed_density(mu_plus, g["k2"], g["E2"], g["B2"], u)
    md = transformed_density_direct(mu_bar, mu_minus, g["k2"], g["E2"], g["B2"], u)
    return ConformalData(sol, sd, tc[core], mt, md, mu_bar)
