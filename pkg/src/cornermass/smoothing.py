"""Mollification of a piecewise-smooth path across the corner t = 0.

    gamma_delta(s) = int gamma(s - sigma_delta(s) tau) phi(tau) dtau,
    sigma_delta(s) = delta^2 sigma(s / delta),

with phi the standard bump on (-1, 1) and sigma = 1/100 on |t| <= 1/4,
falling to 0 at |t| = 1/2 through a quintic smoothstep.  Paths are given
per side as callables returning (value, first, second) t-derivatives, so
the mollified path and its first two derivatives are evaluated by
quadrature without differencing across the kink.  Where the kink enters
the integration window the second derivative picks up the jump term

    [gamma'] (1 - sigma' tau*)^2 phi(tau*) / sigma,   tau* = s / sigma.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy.integrate import quad

from .errors import ConfigError

PLATEAU = 0.01


def _bump(t):
    t = np.asarray(t, float)
    out = np.zeros_like(t)
    inside = np.abs(t) < 1.0
    ti = t[inside]
    out[inside] = np.exp(-1.0 / (1.0 - ti * ti))
    return out


@lru_cache(maxsize=None)
def mollifier_constant():
    """C with int C exp(-1/(1-t^2)) dt = 1."""
    val, _ = quad(lambda t: float(_bump(np.array(t))), -1.0, 1.0, epsabs=1e-14, epsrel=1e-13)
    return 1.0 / val


def mollifier(t):
    return mollifier_constant() * _bump(t)


def _smoothstep(x):
    """Quintic 10x^3 - 15x^4 + 6x^5 and its two derivatives on [0, 1]."""
    x = np.clip(x, 0.0, 1.0)
    s = x * x * x * (10 - 15 * x + 6 * x * x)
    ds = 30 * x * x * (1 - x) ** 2
    d2s = 60 * x * (1 - x) * (1 - 2 * x)
    return s, ds, d2s


def cutoff(t):
    """sigma(t) with derivatives: 1/100 on |t| <= 1/4, quintic shoulders, 0 beyond 1/2."""
    t = np.asarray(t, float)
    a = np.abs(t)
    x = (a - 0.25) * 4.0
    s, ds, d2s = _smoothstep(x)
    val = PLATEAU * (1.0 - s)
    d1 = -PLATEAU * ds * 4.0 * np.sign(t)
    d2 = -PLATEAU * d2s * 16.0
    val = np.where(a >= 0.5, 0.0, val)
    d1 = np.where((a <= 0.25) | (a >= 0.5), 0.0, d1)
    d2 = np.where((a <= 0.25) | (a >= 0.5), 0.0, d2)
    return val, d1, d2


def sigma_delta(s, delta):
    """sigma_delta(s) = delta^2 sigma(s/delta) and its first two s-derivatives."""
    v, d1, d2 = cutoff(np.asarray(s, float) / delta)
    return delta * delta * v, delta * d1, d2


@dataclass(frozen=True)
class SidedPath:
    """A path that is smooth on each side of t = 0.

    ``minus(t)`` and ``plus(t)`` take a 1-d array of t and return a tuple
    (value, d1, d2) of arrays shaped (len(t),) + component shape.
    """

    minus: Callable
    plus: Callable

    def __call__(self, t):
        t = np.atleast_1d(np.asarray(t, float))
        neg = t < 0
        out = None
        for mask, fn in ((neg, self.minus), (~neg, self.plus)):
            if not mask.any():
                continue
            vals = fn(t[mask])
            if out is None:
                out = tuple(np.empty((t.size,) + v.shape[1:]) for v in vals)
            for o, v in zip(out, vals):
                o[mask] = v
        return out

    def jump(self):
        """[gamma'] = gamma'(0+) - gamma'(0-)."""
        z = np.zeros(1)
        return self.plus(z)[1][0] - self.minus(z)[1][0]


def _gauss(n):
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


def mollify_path(path: SidedPath, delta: float, s, n_gauss: int = 64, eps: float = None):
    """gamma_delta and its first two derivatives at the points s.

    Points with |s| >= delta/2 return the input path values untouched.
    """
    if delta <= 0:
        raise ConfigError("delta must be positive")
    if eps is not None and delta > eps / 2:
        raise ConfigError("delta must not exceed half the collar width")
    s = np.atleast_1d(np.asarray(s, float))
    base = path(s)
    out = tuple(b.copy() for b in base)
    inside = np.abs(s) < delta / 2
    if not inside.any():
        return out
    x, w = _gauss(n_gauss)
    jump = path.jump()
    C = mollifier_constant()
    for i in np.flatnonzero(inside):
        si = s[i]
        sig, sig1, sig2 = (float(v) for v in sigma_delta(si, delta))
        tau_star = si / sig
        if abs(tau_star) < 1.0:
            pieces = [(-1.0, tau_star), (tau_star, 1.0)]
        else:
            pieces = [(-1.0, 1.0)]
        taus, ws = [], []
        for lo, hi in pieces:
            taus.append(0.5 * (hi - lo) * x + 0.5 * (hi + lo))
            ws.append(0.5 * (hi - lo) * w)
        tau = np.concatenate(taus)
        wt = np.concatenate(ws) * mollifier(tau)
        # discrete partition of unity: constants are reproduced exactly
        wt = wt / wt.sum()
        u = si - sig * tau
        # keep each sub-interval on its own side of the kink
        vals, d1, d2 = path(u)
        shape = (-1,) + (1,) * (vals.ndim - 1)
        wt_ = wt.reshape(shape)
        fac = (1.0 - sig1 * tau).reshape(shape)
        tt = tau.reshape(shape)
        out[0][i] = np.sum(wt_ * vals, axis=0)
        out[1][i] = np.sum(wt_ * d1 * fac, axis=0)
        acc = np.sum(wt_ * (d2 * fac * fac - d1 * sig2 * tt), axis=0)
        if abs(tau_star) < 1.0:
            phi_star = C * float(_bump(np.array(tau_star)))
            acc = acc + jump * (1.0 - sig1 * tau_star) ** 2 * phi_star / sig
        out[2][i] = acc
    return out


def mollify_potentials(path: SidedPath, delta: float, s, n_gauss: int = 64):
    """omega_delta(t) = int omega(t - sigma_delta(t) s) phi(s) ds, same quadrature as the path."""
    return mollify_path(path, delta, s, n_gauss)


def kink_path(a, b, components=1):
    """Model path a + b|t| (per component), used by the lemma tests."""
    a = np.broadcast_to(np.asarray(a, float), (components,))
    b = np.broadcast_to(np.asarray(b, float), (components,))

    def side(sign):
        def f(t):
            t = np.asarray(t, float)[:, None]
            return (a + sign * b * t, np.broadcast_to(sign * b, t.shape[:1] + b.shape).copy(),
                    np.zeros(t.shape[:1] + b.shape))
        return f

    return SidedPath(side(-1.0), side(1.0))


# -- smoothed collar ----------------------------------------------------------

def _theta_derivs(f, dth, parity):
    """4th-order first and second theta derivatives on cell-centred stations.

    The poles are handled by reflection with the given parity.
    """
    g = np.concatenate([parity * f[..., 1::-1], f, parity * f[..., :-3:-1]], axis=-1)
    fm2, fm1, f0, fp1, fp2 = (g[..., k:k + f.shape[-1]] for k in range(5))
    d1 = (fm2 - 8 * fm1 + 8 * fp1 - fp2) / (12 * dth)
    d2 = (-fm2 + 16 * fm1 - 30 * f0 + 16 * fp1 - fp2) / (12 * dth * dth)
    return d1, d2


def collar_geometry(vals, d1, d2, theta, names):
    """Gauss-equation curvature, energy density and frame fields on the collar.

    vals, d1, d2 are (n_t, n_fields, n_theta) samples of the collar fields and
    their t-derivatives.  With e1 = d_t, e2 = d_theta / sqrt(a), e3 = d_phi / sqrt(Lam):

        R = 2K - H^2 - |A|^2 - 2 d_t H
        16 pi mu_bar = R - 2|Z|^2 / Lam^2 - 2(|d chi|^2 + |d psi|^2) / Lam
        Z = d zeta + psi d chi - chi d psi
    """
    ix = {n: i for i, n in enumerate(names)}
    dth = theta[1] - theta[0]
    a, Lam = vals[:, ix["a"]], vals[:, ix["Lam"]]
    at, Lt = d1[:, ix["a"]], d1[:, ix["Lam"]]
    att, Ltt = d2[:, ix["a"]], d2[:, ix["Lam"]]
    H = 0.5 * (at / a + Lt / Lam)
    Ht = 0.5 * (att / a - (at / a) ** 2 + Ltt / Lam - (Lt / Lam) ** 2)
    A2 = 0.25 * ((at / a) ** 2 + (Lt / Lam) ** 2)
    L = np.sqrt(Lam)
    Lth, Lthth = _theta_derivs(L, dth, -1.0)
    ath, _ = _theta_derivs(a, dth, 1.0)
    K = -Lthth / (a * L) + Lth * ath / (2 * a * a * L)
    R = 2 * K - H * H - A2 - 2 * Ht
    pot = {}
    for name in ("zeta", "chi", "psi"):
        pot[name] = (d1[:, ix[name]], _theta_derivs(vals[:, ix[name]], dth, 1.0)[0])
    chi, psi = vals[:, ix["chi"]], vals[:, ix["psi"]]
    Zt = pot["zeta"][0] + psi * pot["chi"][0] - chi * pot["psi"][0]
    Zth = pot["zeta"][1] + psi * pot["chi"][1] - chi * pot["psi"][1]
    sa = np.sqrt(a)
    z2 = Zt ** 2 + Zth ** 2 / a
    c2 = pot["chi"][0] ** 2 + pot["chi"][1] ** 2 / a
    p2 = pot["psi"][0] ** 2 + pot["psi"][1] ** 2 / a
    k2 = 2 * z2 / Lam ** 2
    e2 = c2 / Lam
    b2 = p2 / Lam
    mu16 = R - k2 - 2 * e2 - 2 * b2
    return {
        "a": a, "Lam": Lam, "H": H, "dH": Ht, "A2": A2, "K": K, "R": R,
        "k2": k2, "E2": e2, "B2": b2, "mu_bar": mu16 / (16 * np.pi),
        "k13": Zth / (sa * Lam), "k23": -Zt / Lam,
        "E1": pot["chi"][1] / (sa * L), "E2c": -pot["chi"][0] / L,
        "B1": pot["psi"][1] / (sa * L), "B2c": -pot["psi"][0] / L,
        "Zt": Zt, "Zth": Zth,
    }


class SmoothedCollar:
    """The deformed collar fields (metric path and potentials) for one delta."""

    def __init__(self, chart, delta, n_gauss=64):
        if delta <= 0 or delta > chart.eps:
            raise ConfigError("need 0 < delta <= eps")
        self.chart = chart
        self.delta = float(delta)
        self.n_gauss = n_gauss
        self.path = SidedPath(chart.minus, chart.plus)

    def raw(self, t):
        return mollify_path(self.path, self.delta, t, self.n_gauss)

    def geometry(self, t):
        v, d1, d2 = self.raw(t)
        return collar_geometry(v, d1, d2, self.chart.theta, self.chart.names)

    def background(self, t):
        v, d1, d2 = self.path(np.atleast_1d(t))
        return collar_geometry(v, d1, d2, self.chart.theta, self.chart.names)

    def breakpoints(self):
        d = self.delta
        c = PLATEAU * d * d
        return np.array([-d / 2, -d / 4, -c, 0.0, c, d / 4, d / 2])


def piecewise_gauss(breaks, n):
    x, w = _gauss(n)
    ts, ws = [], []
    for lo, hi in zip(breaks[:-1], breaks[1:]):
        ts.append(0.5 * (hi - lo) * x + 0.5 * (hi + lo))
        ws.append(0.5 * (hi - lo) * w)
    return np.concatenate(ts), np.concatenate(ws)


def spike_integral(sc: SmoothedCollar, n_gauss=48):
    """int_{|t| < delta/2} (mu_bar_delta - mu_bar) dt per theta station."""
    t, w = piecewise_gauss(sc.breakpoints(), n_gauss)
    g = sc.geometry(t)["mu_bar"]
    b = sc.background(t)["mu_bar"]
    return np.einsum("t,tj->j", w, g - b)


@dataclass
class SpikeReport:
    kappa: float
    scatter: float
    table: list          # (delta, theta, jump, integral, kappa_i)

    @property
    def expected(self):
        return 1.0 / (8 * np.pi)


def spike_check(corner, chart, deltas=(0.1, 0.05, 0.025), n_stations=8, n_gauss=48):
    """Fit the transverse integral of the smoothed energy density against H_- - H_+."""
    th = chart.theta
    idx = np.unique(np.linspace(n_stations // 2, th.size - 1 - n_stations // 2,
                                n_stations).round().astype(int))
    jump = np.interp(th, corner.theta, corner.jump)
    table = []
    ks = []
    for d in deltas:
        S = spike_integral(SmoothedCollar(chart, d), n_gauss)
        for j in idx:
            kj = S[j] / jump[j]
            ks.append(kj)
            table.append((float(d), float(th[j]), float(jump[j]), float(S[j]), float(kj)))
    ks = np.array(ks)
    kappa = float(ks.mean())
    return SpikeReport(kappa, float(np.max(np.abs(ks / kappa - 1))), table)


@dataclass
class SmoothedData:
    """Deformed (t - phi) data: the corner's two sides with the collar replaced for |t| < delta/2."""

    corner: object
    chart: object
    delta: float
    collar: SmoothedCollar

    def fields(self, t):
        """Collar-frame components (k13, k23, E1, E2, B1, B2) at t, each (len(t), n_theta)."""
        g = self.collar.geometry(t)
        return {k: g[k] for k in ("k13", "k23", "E1", "E2c", "B1", "B2c")}

    def mu_bar(self, t):
        return self.collar.geometry(t)["mu_bar"]

    def region(self):
        """O_delta = {|t| < delta/2} in collar coordinates."""
        return (-self.delta / 2, self.delta / 2)


def assemble(corner, chart, delta, n_gauss=64) -> SmoothedData:
    if delta > chart.eps:
        raise ConfigError("delta must not exceed the collar half-width eps")
    return SmoothedData(corner, chart, float(delta), SmoothedCollar(chart, delta, n_gauss))
