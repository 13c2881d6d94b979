"""(t - phi) reduction of axisymmetric maximal data.

Dropping A, pi, E_hat and B_hat and rebuilding (k, E, B) from the
potentials gives data with the same U, alpha, potentials and charges.
For n = 3 the energy density changes by

    16 pi (mu_bar - mu) = |pi|^2 + |E_hat|^2 + |B_hat|^2 + 1/2 e^{2U-4alpha} lambda F^2,

F = d_rho A_z - d_z A_rho, where the last term is the A-part of R(g).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import forms
from .brill import BrillData, Fields, Geometry, constraint_residuals, field_norms
from .errors import PreconditionError
from .potentials import (PotentialSet, SQRT3, coord_fields, potentials_of,
                         reconstruct_fields)

# tr k and J(eta) gates relative to the field scale, in units of h^2
PRECONDITION_GATE = 10.0


@dataclass(frozen=True)
class TPhiData:
    data: BrillData
    pots: PotentialSet
    fields: Fields
    mu_bar: np.ndarray
    mu: np.ndarray

    @property
    def n(self):
        return self.data.n


def transverse_parts(data: BrillData, fields: Fields):
    """Frame components dropped by the reduction: pi, E_hat, B_hat."""
    n = data.n
    q = [0, 1]
    kil = list(range(2, n))
    pi = fields.k.copy()
    for a in q:
        for i in kil:
            pi[a, i] = 0.0
            pi[i, a] = 0.0
    e_hat = fields.E.copy()
    e_hat[:2] = 0.0
    b_hat = fields.B.copy()
    if n == 3:
        b_hat[:2] = 0.0
    else:
        b_hat[:2, :] = 0.0
        b_hat[:, :2] = 0.0
    return pi, e_hat, b_hat


def a_term(data: BrillData):
    """1/2 e^{2U-4alpha} lambda_ij F^i F^j (the curvature contribution of A)."""
    grid = data.grid
    m = data.n - 2
    F = np.stack([grid.d_rho(data.A[i, 1]) - grid.d_z(data.A[i, 0], ) for i in range(m)])
    lam = data.lam
    quad = np.einsum("i...,ij...,j...->...", F, lam, F)
    return 0.5 * np.exp(2 * data.U - 4 * data.alpha) * quad


def a_term_quarter(data: BrillData):
    """The A-term with coefficient 1/4 e^{-2alpha} lambda F^2 (half the curvature term)."""
    grid = data.grid
    m = data.n - 2
    F = np.stack([grid.d_rho(data.A[i, 1]) - grid.d_z(data.A[i, 0]) for i in range(m)])
    return 0.25 * np.exp(-2 * data.alpha) * np.einsum("i...,ij...,j...->...", F, data.lam, F)


def energy_density(source: BrillData, fields: Fields, mu=None):
    """mu_bar from mu and the discarded squares; returns (mu_bar, mu)."""
    n = source.n
    if mu is None:
        mu = constraint_residuals(source, fields)["mu"]
    pi, e_hat, b_hat = transverse_parts(source, fields)
    extra = (np.einsum("ab...,ab...->...", pi, pi)
             + 2.0 / (n - 2) ** 2 * np.einsum("a...,a...->...", e_hat, e_hat)
             + 2.0 / (n - 2) ** 3 * (b_hat ** 2).reshape((-1,) + mu.shape).sum(axis=0))
    if source.has_A():
        extra = extra + a_term(source)
    return mu + extra / (16 * np.pi), mu


def _rel_h2(grid, data):
    ell = data.puncture if data.puncture > 0 else 1.0
    return (grid.h_max / ell) ** 2


def reduce(source: BrillData, fields: Fields, pots: PotentialSet = None, tol_scale=1.0,
           check=True) -> TPhiData:
    """Build the (t - phi) data of a maximal axisymmetric source."""
    grid = source.grid
    mask = grid.interior_mask(exclude_r=source.puncture)
    if check:
        k2, trk, _, _ = field_norms(source, fields)
        scale = max(float(np.sqrt(k2[mask].max())), 1e-300)
        gate = tol_scale * PRECONDITION_GATE * _rel_h2(grid, source) * scale + 1e-12
        if float(np.abs(trk[mask]).max()) > gate:
            raise PreconditionError(f"source not maximal: |tr k| = {np.abs(trk[mask]).max():.3e}")
        jres = momentum_eta_residual(source, fields)
        jmax = max((float(np.abs(j[mask]).max()) for j in jres), default=0.0)
        if jmax > gate * 10:
            raise PreconditionError(f"J(eta) residual {jmax:.3e} exceeds gate")
    if pots is None:
        pots, _ = potentials_of(source, fields, tol_scale=tol_scale, check=check)
    pots = pots.anchored()
    bar = replace(source, A=np.zeros_like(source.A))
    if not source.has_A() and _is_tphi(source, fields):
        new_fields = fields
    else:
        new_fields = reconstruct_fields(bar, pots)
    mu_bar, mu = energy_density(source, fields)
    return TPhiData(bar, pots, new_fields, mu_bar, mu)


def _is_tphi(data, fields):
    pi, e_hat, b_hat = transverse_parts(data, fields)
    return not (np.any(pi) or np.any(e_hat) or np.any(b_hat))


# -- identities ----------------------------------------------------------

def momentum_eta_residual(data: BrillData, fields: Fields, geo=None):
    """8 pi J(eta_l) = div(k(eta_l)) + 2/(n-2)^2 i_{eta_l} *(B ^ E), one array per l (full grid)."""
    geo = geo or Geometry(data)
    n = data.n
    grid = data.grid
    kc, Ec, Bc = coord_fields(geo, fields)
    p = 1 if n == 3 else 2
    be = geo.hodge(forms.wedge(Bc, p, Ec, 1), p + 1)
    out = []
    for l in range(n - 2):
        x = np.einsum("am...,m...->a...", geo.ginv, kc[:, 2 + l])
        div = forms.divergence(x, geo.sqrtg, grid)
        res = div + 2.0 / (n - 2) ** 2 * be[2 + l]
        out.append(forms.pad_axis(res))
    return out


def maxwell_residuals(data: BrillData, fields: Fields, geo=None):
    """(div E - (n-3)/sqrt3 *(B ^ B), div B) on the full grid.

    For n = 4 div B is a 1-form; its largest component magnitude is returned.
    """
    geo = geo or Geometry(data)
    n = data.n
    grid = data.grid
    _, Ec, Bc = coord_fields(geo, fields)
    divE = forms.divergence(np.einsum("am...,m...->a...", geo.ginv, Ec), geo.sqrtg, grid)
    if n == 3:
        rhsE = 0.0
        divB = forms.divergence(np.einsum("am...,m...->a...", geo.ginv, Bc), geo.sqrtg, grid)
    else:
        bb = geo.hodge(forms.wedge(Bc, 2, Bc, 2), 4)
        # divergence convention (-1)^{n+1} * d * = -(standard) for n = 4
        divE = -divE
        rhsE = (n - 3) / SQRT3 * bb
        Bup = forms.raise_all(Bc, geo.ginv, 2)
        comps = [forms.divergence(Bup[:, nu], geo.sqrtg, grid) for nu in range(n)]
        divB = np.max(np.abs(np.stack(comps)), axis=0)
    return forms.pad_axis(divE - rhsE), forms.pad_axis(divB)


def verify_identities(td: TPhiData, exclude_r=None):
    """Max-norm residuals of tr k, J(eta), div B, div E - RHS on the interior."""
    data, fields = td.data, td.fields
    grid = data.grid
    if exclude_r is None:
        exclude_r = 1.5 * data.puncture
    mask = grid.interior_mask(exclude_r=exclude_r)
    geo = Geometry(data)
    _, trk, _, _ = field_norms(data, fields)
    jres = momentum_eta_residual(data, fields, geo)
    dE, dB = maxwell_residuals(data, fields, geo)
    rep = {"trk": float(np.abs(trk[mask]).max())}
    for l, j in enumerate(jres):
        rep[f"J_eta{l + 1}"] = float(np.abs(j[mask]).max())
    rep["divE"] = float(np.abs(dE[mask]).max())
    rep["divB"] = float(np.abs(dB[mask]).max())
    return rep


def convergence_order(hs, errs):
    """Least-squares slope of log err against log h."""
    hs = np.asarray(hs, float)
    errs = np.asarray(errs, float)
    ok = errs > 0
    if ok.sum() < 2:
        return math.inf
    return float(np.polyfit(np.log(hs[ok]), np.log(errs[ok]), 1)[0])
