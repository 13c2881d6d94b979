"""Tensor-product (rho, z) grids and finite-difference operators.

Nodes come from a smooth sinh map of a uniform computational coordinate,
so derivatives are taken with uniform stencils in the computational
coordinate and converted with the analytic map derivatives.  The first
rho node sits on the axis; stencils close across it by parity.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError

EVEN = 1
ODD = -1


def _sinh_map(xi, length, beta):
    """Map xi in [-1, 1] to length*sinh(beta*xi)/sinh(beta) and derivatives."""
    if beta == 0.0:
        x = length * xi
        return x, np.full_like(xi, length), np.zeros_like(xi)
    s = length / np.sinh(beta)
    x = s * np.sinh(beta * xi)
    x1 = s * beta * np.cosh(beta * xi)
    x2 = s * beta * beta * np.sinh(beta * xi)
    return x, x1, x2


@dataclass(frozen=True)
class Grid2D:
    """Quotient grid on the half plane rho >= 0.

    ``rho_max`` and ``z_max`` are the outer extents, ``beta_rho`` and
    ``beta_z`` the sinh stretching strengths (0 means uniform).  Node
    arrays are derived, so the spacing metadata is always consistent.
    """

    n_rho: int
    n_z: int
    rho_max: float
    z_max: float
    beta_rho: float = 0.0
    beta_z: float = 0.0
    rho: np.ndarray = field(init=False, repr=False, compare=False)
    z: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.n_rho < 16 or self.n_z < 16:
            raise ConfigError("grid needs at least 16 nodes per direction")
        if self.rho_max <= 0 or self.z_max <= 0:
            raise ConfigError("grid extents must be positive")
        if self.beta_rho < 0 or self.beta_z < 0:
            raise ConfigError("stretching strengths must be non-negative")
        xi = np.linspace(0.0, 1.0, self.n_rho)
        eta = np.linspace(-1.0, 1.0, self.n_z)
        r, r1, r2 = _sinh_map(xi, self.rho_max, self.beta_rho)
        z, z1, z2 = _sinh_map(eta, self.z_max, self.beta_z)
        r[0] = 0.0
        # exact symmetry in z keeps parity tests clean
        z = 0.5 * (z - z[::-1])
        object.__setattr__(self, "rho", r)
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "_dr", (r1, r2, xi[1] - xi[0]))
        object.__setattr__(self, "_dz", (z1, z2, eta[1] - eta[0]))

    @classmethod
    def stretched(cls, n_rho, n_z, r_max, h_min):
        """Grid reaching r_max whose smallest spacing is roughly h_min."""
        beta_r = _solve_beta(r_max, n_rho - 1, h_min)
        beta_z = _solve_beta(r_max, (n_z - 1) / 2.0, h_min)
        return cls(n_rho, n_z, r_max, r_max, beta_r, beta_z)

    def descriptor(self):
        return {
            "kind": "sinh",
            "n_rho": self.n_rho,
            "n_z": self.n_z,
            "rho_max": self.rho_max,
            "z_max": self.z_max,
            "beta_rho": self.beta_rho,
            "beta_z": self.beta_z,
        }

    @classmethod
    def from_descriptor(cls, d):
        if d.get("kind", "sinh") != "sinh":
            raise ConfigError(f"unknown grid kind {d.get('kind')!r}")
        return cls(int(d["n_rho"]), int(d["n_z"]), float(d["rho_max"]),
                   float(d["z_max"]), float(d.get("beta_rho", 0.0)),
                   float(d.get("beta_z", 0.0)))

    @property
    def shape(self):
        return (self.n_rho, self.n_z)

    @property
    def h_rho(self):
        return np.diff(self.rho)

    @property
    def h_z(self):
        return np.diff(self.z)

    @property
    def h_max(self):
        """Largest spacing in the inner region r < 10 (used for gate scaling)."""
        hr = self.h_rho[self.rho[1:] < 10.0]
        hz = self.h_z[np.abs(self.z[1:]) < 10.0]
        vals = [a.max() for a in (hr, hz) if a.size]
        return max(vals) if vals else max(self.h_rho.max(), self.h_z.max())

    def mesh(self):
        return np.meshgrid(self.rho, self.z, indexing="ij")

    def polar(self):
        R, Z = self.mesh()
        r = np.hypot(R, Z)
        return r, Z / r

    @property
    def r_outer(self):
        return min(self.rho_max, self.z_max)

    # -- derivatives -------------------------------------------------
    def d_rho(self, f, parity=EVEN):
        f1, _ = self._xi_derivs(f, parity)
        return f1 / self._dr[0][:, None]

    def d_z(self, f):
        f1, _ = _uniform_derivs(np.moveaxis(f, -1, 0), self._dz[2], None)
        return np.moveaxis(f1, 0, -1) / self._dz[0]

    def d_rho2(self, f, parity=EVEN):
        f1, f2 = self._xi_derivs(f, parity)
        x1 = self._dr[0][:, None]
        x2 = self._dr[1][:, None]
        return (f2 - x2 * f1 / x1) / (x1 * x1)

    def d_z2(self, f):
        g = np.moveaxis(f, -1, 0)
        f1, f2 = _uniform_derivs(g, self._dz[2], None)
        f1 = np.moveaxis(f1, 0, -1)
        f2 = np.moveaxis(f2, 0, -1)
        x1, x2 = self._dz[0], self._dz[1]
        return (f2 - x2 * f1 / x1) / (x1 * x1)

    def d_rhoz(self, f, parity=EVEN):
        return self.d_z(self.d_rho(f, parity))

    def grad(self, f, parity=EVEN):
        return np.stack([self.d_rho(f, parity), self.d_z(f)])

    def laplacian(self, f):
        """Flat axisymmetric 3D Laplacian of an even field; axis row uses 2 f_rr + f_zz."""
        frr = self.d_rho2(f)
        fr = self.d_rho(f)
        out = frr + self.d_z2(f)
        out[1:] += fr[1:] / self.rho[1:, None]
        out[0] += frr[0]
        return out

    def laplacian_rz(self, f):
        return self.d_rho2(f) + self.d_z2(f)

    def _xi_derivs(self, f, parity):
        g = np.moveaxis(f, -2, 0)
        f1, f2 = _uniform_derivs(g, self._dr[2], parity)
        return np.moveaxis(f1, 0, -2), np.moveaxis(f2, 0, -2)

    # -- integration -------------------------------------------------
    def interior_mask(self, shells=2, exclude_r=0.0):
        """Nodes away from the axis, the outer shells and an optional ball."""
        m = np.ones(self.shape, dtype=bool)
        m[0] = False
        m[-shells:] = False
        m[:, :shells] = False
        m[:, -shells:] = False
        if exclude_r > 0:
            r, _ = self.polar()
            m &= r > exclude_r
        return m


def _uniform_derivs(g, h, parity):
    """First and second derivatives along axis 0 with uniform spacing h.

    parity None means one-sided closures at both ends; otherwise the
    start is a symmetry axis with a ghost node g[-1] = parity * g[1].
    """
    f1 = np.empty_like(g)
    f2 = np.empty_like(g)
    f1[1:-1] = (g[2:] - g[:-2]) / (2 * h)
    f2[1:-1] = (g[2:] - 2 * g[1:-1] + g[:-2]) / (h * h)
    if parity is None:
        f1[0] = (-3 * g[0] + 4 * g[1] - g[2]) / (2 * h)
        f2[0] = (2 * g[0] - 5 * g[1] + 4 * g[2] - g[3]) / (h * h)
    elif parity == EVEN:
        f1[0] = 0.0
        f2[0] = 2 * (g[1] - g[0]) / (h * h)
    else:
        f1[0] = g[1] / h
        f2[0] = 0.0
    f1[-1] = (3 * g[-1] - 4 * g[-2] + g[-3]) / (2 * h)
    f2[-1] = (2 * g[-1] - 5 * g[-2] + 4 * g[-3] - g[-4]) / (h * h)
    return f1, f2


def _solve_beta(length, n_int, h_min):
    """Stretching beta such that the first spacing of the sinh map is h_min."""
    from scipy.optimize import brentq

    if length / n_int <= h_min:
        return 0.0
    d = 1.0 / n_int

    def first(b):
        return length * np.sinh(b * d) / np.sinh(b) - h_min

    return brentq(first, 1e-9, 200.0)


def axis_fill(f, parity=EVEN):
    """Fill the rho = 0 row from the two neighbours by parity."""
    f = np.array(f, copy=True)
    if parity == ODD:
        f[..., 0, :] = 0.0
    else:
        f[..., 0, :] = (4 * f[..., 1, :] - f[..., 2, :]) / 3.0
    return f
