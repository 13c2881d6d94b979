"""Axisymmetric initial data in Brill form.

    g = e^{2 alpha - 2U} (drho^2 + dz^2)
        + e^{-2U} lambda_ij (dphi^i + A^i_a dy^a)(dphi^j + A^j_a dy^a)

with det lambda = rho^2.  lambda is stored through a traceless symmetric
log-deviation S, lambda = rho^{2/(n-2)} expm(S), so the determinant
constraint holds by construction (for n = 3, S is identically zero).

Matter fields (k, E, B) live in :class:`Fields` as components in the
orthonormal frame returned by :func:`frame`.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from . import forms
from .errors import ConfigError, DataIntegrityError
from .grid import Grid2D


@dataclass(frozen=True)
class BrillData:
    grid: Grid2D
    n: int
    U: np.ndarray
    alpha: np.ndarray
    S: np.ndarray  # (n-2, n-2, N_rho, N_z) traceless symmetric
    A: np.ndarray  # (n-2, 2, N_rho, N_z), A[i, a] = A^i_a
    exact: Optional[Callable] = field(default=None, compare=False, repr=False)
    label: str = ""
    # radius of a coordinate puncture at the origin (0 for regular data)
    puncture: float = 0.0

    def __post_init__(self):
        if self.n not in (3, 4):
            raise ConfigError("dimension n must be 3 or 4")
        m = self.n - 2
        shape = self.grid.shape
        if self.U.shape != shape or self.alpha.shape != shape:
            raise ConfigError("U and alpha must match the grid")
        if self.S.shape != (m, m) + shape or self.A.shape != (m, 2) + shape:
            raise ConfigError("S or A has the wrong shape")
        for name in ("U", "alpha", "S", "A"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise DataIntegrityError(f"non-finite values in {name}")

    def with_fields(self, **kw):
        return replace(self, **kw)

    @property
    def lam(self):
        """lambda_ij on the grid."""
        rho = self.grid.rho[:, None]
        return rho ** (2.0 / (self.n - 2)) * expm_sym(self.S)

    @property
    def Lam(self):
        """Gram matrix of the Killing fields, e^{-2U} lambda."""
        return np.exp(-2 * self.U) * self.lam

    def has_A(self):
        return bool(np.any(self.A != 0))


@dataclass(frozen=True)
class Fields:
    """Frame components of (k, E, B).  B is a 1-form for n = 3, a 2-form for n = 4."""

    k: np.ndarray
    E: np.ndarray
    B: np.ndarray

    @classmethod
    def zeros(cls, data):
        n = data.n
        shape = data.grid.shape
        bshape = (n,) if n == 3 else (n, n)
        return cls(np.zeros((n, n) + shape), np.zeros((n,) + shape),
                   np.zeros(bshape + shape))

    def scaled(self, sk=1.0, se=1.0, sb=1.0):
        return Fields(sk * self.k, se * self.E, sb * self.B)


def expm_sym(S):
    """Matrix exponential of a symmetric traceless field (closed form for 1x1 and 2x2)."""
    m = S.shape[0]
    if m == 1:
        return np.exp(S)
    s = np.sqrt(S[0, 0] ** 2 + S[0, 1] ** 2)
    ch = np.cosh(s)
    # sinh(s)/s, safe at s = 0
    shc = np.where(s > 1e-8, np.sinh(s) / np.where(s > 1e-8, s, 1.0), 1.0 + s * s / 6)
    out = np.empty_like(S)
    out[0, 0] = ch + shc * S[0, 0]
    out[1, 1] = ch + shc * S[1, 1]
    out[0, 1] = out[1, 0] = shc * S[0, 1]
    return out


# -- seeds -----------------------------------------------------------

def _empty(grid, n):
    m = n - 2
    shape = grid.shape
    return np.zeros((m, m) + shape), np.zeros((m, 2) + shape)


def make_flat(grid: Grid2D, n: int = 3) -> BrillData:
    S, A = _empty(grid, n)
    z = np.zeros(grid.shape)

    def exact(rho, zz):
        zero = np.zeros(np.broadcast(rho, zz).shape)
        return {"U": zero, "alpha": zero}

    return BrillData(grid, n, z, z.copy(), S, A, exact=exact, label="flat")


def _check_extent(grid, m, factor=20.0):
    if grid.r_outer < factor * m:
        raise ConfigError(f"grid outer radius {grid.r_outer} is below {factor} m")


def schwarzschild_U(rho, z, m):
    r = np.hypot(rho, z)
    return -2.0 * np.log1p(m / (2.0 * r))


def make_schwarzschild(grid: Grid2D, m: float) -> BrillData:
    if m <= 0:
        raise ConfigError("mass must be positive")
    _check_extent(grid, m)
    R, Z = grid.mesh()
    S, A = _empty(grid, 3)

    def exact(rho, z):
        return {"U": schwarzschild_U(rho, z, m), "alpha": np.zeros(np.shape(rho))}

    return BrillData(grid, 3, schwarzschild_U(R, Z, m), np.zeros(grid.shape), S, A,
                     exact=exact, label=f"schwarzschild(m={m})", puncture=m)


def plummer_U(rho, z, m, s):
    r2 = rho * rho + z * z
    return -2.0 * np.log1p(m / (2.0 * np.sqrt(r2 + s * s)))


def make_plummer(grid: Grid2D, m: float, s: float) -> BrillData:
    """Regular conformally flat star g = phi^4 delta, phi = 1 + m / (2 sqrt(r^2 + s^2)).

    R = -8 phi^-5 Lap phi > 0, so the data carry positive energy density.
    """
    if m <= 0 or s <= 0:
        raise ConfigError("need m > 0 and s > 0")
    _check_extent(grid, m)
    R, Z = grid.mesh()
    S, A = _empty(grid, 3)

    def exact(rho, z):
        return {"U": plummer_U(rho, z, m, s), "alpha": np.zeros(np.shape(rho))}

    return BrillData(grid, 3, plummer_U(R, Z, m, s), np.zeros(grid.shape), S, A,
                     exact=exact, label=f"plummer(m={m},s={s})")


def reissner_nordstrom_U(rho, z, m, q):
    r = np.hypot(rho, z)
    return -np.log(1.0 + m / r + (m * m - q * q) / (4 * r * r))


def make_reissner_nordstrom(grid: Grid2D, m: float, q: float, magnetic=False):
    """Time-symmetric charged slice; returns (data, PotentialSet, Fields).

    Isotropic form e^{-U} = 1 + m/r + (m^2 - q^2)/(4 r^2); the Coulomb
    field is E = q e^{2U} r^-2 dr-hat in the frame (or B for magnetic).
    """
    from .potentials import PotentialSet

    if m <= 0 or abs(q) > m:
        raise ConfigError("need m > 0 and |q| <= m")
    _check_extent(grid, m)
    R, Z = grid.mesh()
    U = reissner_nordstrom_U(R, Z, m, q)
    S, A = _empty(grid, 3)
    data = BrillData(grid, 3, U, np.zeros(grid.shape), S, A,
                     exact=lambda rho, z: {"U": reissner_nordstrom_U(rho, z, m, q),
                                           "alpha": np.zeros(np.shape(rho))},
                     label=f"rn(m={m},q={q})", puncture=m)
    r = np.hypot(R, Z)
    # orthonormal radial component: e_r = e^U d/dr  => E(e_r) = q e^{2U}/r^2
    er = q * np.exp(2 * U) / r ** 2
    comp = np.stack([er * R / r, er * Z / r, np.zeros_like(r)])
    pot_val = -q * Z / r
    zero = np.zeros(grid.shape)
    f = Fields.zeros(data)
    if magnetic:
        f = Fields(f.k, f.E, comp)
        pots = PotentialSet(zeta=zero[None], chi=zero.copy(), psi=pot_val[None])
    else:
        f = Fields(f.k, comp, f.B)
        pots = PotentialSet(zeta=zero[None], chi=pot_val, psi=zero[None])
    return data, pots, f


def extreme_kerr_functions(rho, z, J):
    """(U, alpha, zeta) of the extreme Kerr canonical slice in Brill coordinates.

    Boyer-Lindquist radius r_BL = r + m with m = a = sqrt|J|, r = |(rho, z)|.
    """
    a = np.sqrt(abs(J))
    m = a
    r = np.hypot(rho, z)
    c = z / r
    s2 = rho * rho / (r * r)
    rb = r + m
    sig = rb * rb + a * a * c * c
    num = (rb * rb + a * a) ** 2 - a * a * r * r * s2
    U = -0.5 * np.log(num / (sig * r * r))
    alpha = 0.5 * np.log(sig * sig / num)
    zeta = np.sign(J) * (abs(J) * (c ** 3 - 3 * c) - abs(J) * a * a * c * s2 * s2 / sig)
    return U, alpha, zeta


def make_extreme_kerr(grid: Grid2D, J: float):
    """Extreme Kerr canonical slice; returns (data, PotentialSet)."""
    from .potentials import PotentialSet

    if J == 0:
        raise ConfigError("J must be nonzero")
    _check_extent(grid, np.sqrt(abs(J)))
    R, Z = grid.mesh()
    U, alpha, zeta = extreme_kerr_functions(R, Z, J)
    alpha[0] = 0.0
    S, A = _empty(grid, 3)

    def exact(rho, z):
        u, al, ze = extreme_kerr_functions(rho, z, J)
        return {"U": u, "alpha": al, "zeta": ze}

    data = BrillData(grid, 3, U, alpha, S, A, exact=exact, label=f"extreme_kerr(J={J})",
                     puncture=float(np.sqrt(abs(J))))
    zero = np.zeros(grid.shape)
    return data, PotentialSet(zeta=zeta[None], chi=zero, psi=zero[None].copy())


# -- geometry --------------------------------------------------------

class Geometry:
    """Coordinate metric, inverse, volume density and frame off the axis."""

    def __init__(self, data: BrillData, orientation: float = 1.0):
        self.data = data
        n = self.n = data.n
        m = n - 2
        sl = slice(1, None)
        grid = data.grid
        U = data.U[sl]
        al = data.alpha[sl]
        Lam = data.Lam[:, :, sl]
        A = data.A[:, :, sl]
        shape = U.shape
        self.shape = shape
        g = np.zeros((n, n) + shape)
        conf = np.exp(2 * al - 2 * U)
        LA = np.einsum("ij...,ja...->ia...", Lam, A)  # Lam_ij A^j_a
        for a in range(2):
            g[a, a] += conf
            for b in range(2):
                g[a, b] += np.einsum("i...,i...->...", A[:, a], LA[:, b])
            for i in range(m):
                g[a, 2 + i] = g[2 + i, a] = LA[i, a]
        g[2:, 2:] = Lam
        self.g = g
        gm = np.moveaxis(g, (0, 1), (-2, -1))
        self.ginv = np.moveaxis(np.linalg.inv(gm), (-2, -1), (0, 1))
        self.sqrtg = np.sqrt(np.linalg.det(gm))
        self.eps = orientation * forms.levi_civita(n)
        self.Lam = Lam
        self.detLam = np.linalg.det(np.moveaxis(Lam, (0, 1), (-2, -1)))
        # frame e_A^mu and coframe theta^A_mu
        e = np.zeros((n, n) + shape)
        f = np.exp(U - al)
        for a in range(2):
            e[a, a] = f
            for i in range(m):
                e[a, 2 + i] = -f * A[i, a]
        rho = grid.rho[sl, None]
        lam_mhalf = rho ** (-1.0 / m) * expm_sym(-0.5 * data.S[:, :, sl])
        e[2:, 2:] = np.exp(U) * lam_mhalf
        self.e = e
        em = np.moveaxis(e, (0, 1), (-2, -1))
        # theta^A_mu with theta^A(e_B) = delta: theta = (e^T)^{-1} as matrices [A, mu]
        th = np.linalg.inv(np.swapaxes(em, -1, -2))
        self.theta = np.moveaxis(th, (-2, -1), (1, 0))

    # frame <-> coordinate conversions for covariant tensors
    def to_coord(self, t):
        """Covariant frame components (sliced) to coordinate components."""
        p = t.ndim - 2
        out = t
        for k in range(p):
            out = np.moveaxis(np.einsum("Am...,A...->m...", self.theta,
                                        np.moveaxis(out, k, 0)), 0, k)
        return out

    def to_frame(self, t):
        p = t.ndim - 2
        out = t
        for k in range(p):
            out = np.moveaxis(np.einsum("Am...,m...->A...", self.e,
                                        np.moveaxis(out, k, 0)), 0, k)
        return out

    def eta(self, l):
        """Killing 1-form g(d/dphi^l, .)."""
        return self.g[2 + l]

    def killing(self, l):
        return forms.killing_vector(self.n, l, self.shape)

    def hodge(self, omega, p):
        return forms.hodge(omega, p, self.ginv, self.sqrtg, self.eps)

    def norm2(self, omega, p):
        """|omega|^2 with the full index contraction (no 1/p!)."""
        up = forms.raise_all(omega, self.ginv, p)
        return (up * omega).reshape((-1,) + self.shape).sum(axis=0)


@dataclass(frozen=True)
class FrameField:
    e: np.ndarray       # (n, n, N_rho, N_z): e_A^mu, axis row filled by parity
    theta: np.ndarray   # (n, n, N_rho, N_z): theta^A_mu
    orthonormality: float


def frame(data: BrillData) -> FrameField:
    """Orthonormal frame of the Brill metric.

    e_{i+2} = e^U (lambda^{-1/2})_ij d/dphi^j; for n = 3 this is e^U rho^{-1} d/dphi,
    the unit vector along the rotation orbits.
    """
    lam = np.moveaxis(data.lam[:, :, 1:], (0, 1), (-2, -1))
    ev = np.linalg.eigvalsh(lam)
    bad = np.argwhere(ev[..., 0] <= 0)
    if bad.size:
        i, j = bad[0]
        raise DataIntegrityError("lambda is not positive definite", (i + 1, j))
    geo = Geometry(data)
    gram = np.einsum("Am...,mn...,Bn...->AB...", geo.e, geo.g, geo.e)
    err = float(np.max(np.abs(gram - np.eye(data.n)[:, :, None, None])))
    e = np.empty((data.n, data.n) + data.grid.shape)
    th = np.empty_like(e)
    e[..., 1:, :] = geo.e
    th[..., 1:, :] = geo.theta
    # axis row: the rotation direction degenerates; keep only the quotient part
    f0 = np.exp(data.U[0] - data.alpha[0])
    e[..., 0, :] = 0.0
    th[..., 0, :] = 0.0
    for a in range(2):
        e[a, a, 0] = f0
        th[a, a, 0] = 1.0 / f0
    return FrameField(e, th, err)


def field_norms(data: BrillData, fields: Fields):
    """(|k|^2, tr k, |E|^2, |B|^2) from frame components (full index contraction)."""
    k2 = np.einsum("ab...,ab...->...", fields.k, fields.k)
    trk = np.einsum("aa...->...", fields.k)
    e2 = np.einsum("a...,a...->...", fields.E, fields.E)
    b2 = (fields.B ** 2).reshape((-1,) + data.grid.shape).sum(axis=0)
    return k2, trk, e2, b2


# -- curvature -------------------------------------------------------

def scalar_curvature(data: BrillData, general: bool = False):
    """Scalar curvature R(g).

    For n = 3 the closed form
        R = e^{2U-2alpha}(4 Lap U - 2 Lap_rz alpha - 2|grad U|^2) - 1/2 rho^2 e^{2U-4alpha} F^2
    with F = d_rho A_z - d_z A_rho is used; otherwise a general Christoffel stencil.
    """
    grid = data.grid
    if data.n == 3 and not general:
        U, al = data.U, data.alpha
        lapU = grid.laplacian(U)
        lapa = grid.laplacian_rz(al)
        gu2 = grid.d_rho(U) ** 2 + grid.d_z(U) ** 2
        R = np.exp(2 * U - 2 * al) * (4 * lapU - 2 * lapa - 2 * gu2)
        if data.has_A():
            F = grid.d_rho(data.A[0, 1]) - grid.d_z(data.A[0, 0], )
            R = R - 0.5 * grid.rho[:, None] ** 2 * np.exp(2 * U - 4 * al) * F ** 2
        return R
    return _scalar_curvature_general(data)


def _scalar_curvature_general(data):
    """Christoffel-symbol scalar curvature off the axis; axis row filled by parity."""
    geo = Geometry(data)
    grid = data.grid
    n = data.n
    g, gi = geo.g, geo.ginv
    # first and second coordinate derivatives of the metric (rho and z only);
    # the metric components are smooth across the axis, Christoffels are not
    dg = np.zeros((n,) + g.shape)
    ddg = np.zeros((n, n) + g.shape)
    full = forms.pad_axis(g)
    for mu in range(n):
        for nu in range(n):
            par = forms.component_parity((mu, nu))
            f = full[mu, nu]
            dg[0, mu, nu] = grid.d_rho(f, par)[1:]
            dg[1, mu, nu] = grid.d_z(f)[1:]
            ddg[0, 0, mu, nu] = grid.d_rho2(f, par)[1:]
            ddg[1, 1, mu, nu] = grid.d_z2(f)[1:]
            ddg[0, 1, mu, nu] = ddg[1, 0, mu, nu] = grid.d_z(grid.d_rho(f, par))[1:]

    def lowered(d):
        # d_m g_sn + d_n g_sm - d_s g_mn, indexed [s, m, n]
        return (np.einsum("msn...->smn...", d) + np.einsum("nsm...->smn...", d)
                - d)

    t = lowered(dg)
    gam = 0.5 * np.einsum("ls...,smn...->lmn...", gi, t)
    # d_k g^{ls} = -g^{la} d_k g_ab g^{bs}
    dgi = -np.einsum("la...,kab...,bs...->kls...", gi, dg, gi)
    dt = np.stack([lowered(ddg[k]) for k in range(n)])
    dgam = 0.5 * (np.einsum("kls...,smn...->klmn...", dgi, t)
                  + np.einsum("ls...,ksmn...->klmn...", gi, dt))
    # Ric_mn = d_l G^l_mn - d_n G^l_ml + G^l_ls G^s_mn - G^l_ns G^s_ml
    ric = (np.einsum("llmn...->mn...", dgam)
           - np.einsum("nlml...->mn...", dgam)
           + np.einsum("lls...,smn...->mn...", gam, gam)
           - np.einsum("lns...,sml...->mn...", gam, gam))
    R = np.einsum("mn...,mn...->...", gi, ric)
    return forms.pad_axis(R)


def constraint_residuals(data: BrillData, fields: Optional[Fields] = None):
    """Energy density mu from the Hamiltonian constraint and tr k.

    16 pi mu = R - |k|^2 + (tr k)^2 - 2/(n-2)^2 |E|^2 - 2/(n-2)^3 |B|^2
    """
    n = data.n
    R = scalar_curvature(data)
    if fields is None:
        return {"mu": R / (16 * np.pi), "trk": np.zeros_like(R)}
    k2, trk, e2, b2 = field_norms(data, fields)
    rhs = R - k2 + trk ** 2 - 2.0 / (n - 2) ** 2 * e2 - 2.0 / (n - 2) ** 3 * b2
    return {"mu": rhs / (16 * np.pi), "trk": trk}


# -- mean curvature --------------------------------------------------

def _eval_fields(data, rho, z, which=("U", "alpha")):
    from scipy.interpolate import RectBivariateSpline

    out = {}
    for name in which:
        f = getattr(data, name)
        spl = RectBivariateSpline(data.grid.rho, data.grid.z, f, kx=3, ky=3)
        out[name] = spl
    return out


def mean_curvature(data: BrillData, r0: float, side: str = "outer", n_theta: int = 64,
                   h: Optional[float] = None):
    """Mean curvature of the sphere r = r0 with the normal pointing outward (+r).

    H = (2(n-2)/r + d_r(alpha - 2(n-2)U)) / sqrt(e^{2alpha-2U} + e^{-2U} lambda_ij A^i A^j)

    Radial derivatives are one-sided: side="inner" uses samples at r <= r0,
    side="outer" samples at r >= r0 (2nd order, three points).  Fields are
    evaluated from the data's exact callable when present, else by spline.
    Returns (theta, H).
    """
    n = data.n
    grid = data.grid
    if h is None:
        h = _local_h(grid, r0)
    if r0 - 3 * h <= 0 or r0 + 3 * h >= grid.r_outer:
        raise ConfigError("r0 lies within 3 stencil widths of the grid edge")
    if side not in ("inner", "outer"):
        raise ConfigError("side must be 'inner' or 'outer'")
    x, _ = np.polynomial.legendre.leggauss(n_theta)
    theta = np.sort(np.arccos(x))
    s = 1.0 if side == "outer" else -1.0
    radii = r0 + s * h * np.arange(3)
    vals = {}
    for key in ("U", "alpha"):
        vals[key] = np.empty((3, n_theta))
    for k, rr in enumerate(radii):
        rho = rr * np.sin(theta)
        z = rr * np.cos(theta)
        if data.exact is not None:
            ex = data.exact(rho, z)
            vals["U"][k] = ex["U"]
            vals["alpha"][k] = ex["alpha"]
        else:
            spl = _eval_fields(data, rho, z)
            for key in ("U", "alpha"):
                vals[key][k] = spl[key].ev(rho, z)
    def dr(v):
        return s * (-3 * v[0] + 4 * v[1] - v[2]) / (2 * h)
    U0 = vals["U"][0]
    a0 = vals["alpha"][0]
    num = 2.0 * (n - 2) / r0 + dr(vals["alpha"] - 2 * (n - 2) * vals["U"])
    den2 = np.exp(2 * a0 - 2 * U0)
    if data.has_A():
        from scipy.interpolate import RectBivariateSpline

        rho0 = r0 * np.sin(theta)
        z0 = r0 * np.cos(theta)
        lam = data.lam
        m = n - 2
        Av = np.empty((m, n_theta))
        for i in range(m):
            ar = RectBivariateSpline(grid.rho, grid.z, data.A[i, 0]).ev(rho0, z0)
            az = RectBivariateSpline(grid.rho, grid.z, data.A[i, 1]).ev(rho0, z0)
            Av[i] = r0 ** (n - 3) * (ar * np.sin((n - 2) * theta) + az * np.cos((n - 2) * theta))
        lv = np.empty((m, m, n_theta))
        for i in range(m):
            for j in range(m):
                lv[i, j] = RectBivariateSpline(grid.rho, grid.z, lam[i, j]).ev(rho0, z0)
        den2 = den2 + np.exp(-2 * U0) * np.einsum("i...,ij...,j...->...", Av, lv, Av)
    return theta, num / np.sqrt(den2)


def _local_h(grid, r0):
    """Stencil step: the grid spacing near r0 in both directions."""
    ir = np.searchsorted(grid.rho, r0)
    iz = np.searchsorted(grid.z, r0)
    hr = grid.rho[min(ir, grid.n_rho - 1)] - grid.rho[max(ir - 1, 0)]
    hz = grid.z[min(iz, grid.n_z - 1)] - grid.z[max(iz - 1, 0)]
    return float(max(hr, hz))


def decay_report(data: BrillData):
    """max|U|, max|alpha| on the two outermost radial shells, times r^{1/2}."""
    r, _ = data.grid.polar()
    ro = data.grid.r_outer
    shells = []
    for frac in (0.5, 0.9):
        band = np.abs(r - frac * ro) < 0.05 * ro
        shells.append(float(np.max(np.abs(data.U[band]) + np.abs(data.alpha[band]))
                            * np.sqrt(frac * ro)))
    return shells
