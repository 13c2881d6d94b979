"""Coordinate exterior calculus for metrics depending on (rho, z) only.

Tensors are arrays whose leading axes are coordinate indices in the order
(rho, z, phi^1, ..., phi^{n-2}) and whose trailing two axes are the grid.
Only nodes with rho > 0 are handled here; callers pad the axis row with
:func:`pad_axis`, which extends each component by its parity.  A
component is odd across the axis when it carries an odd number of rho
indices, and the volume density sqrt(g) is odd.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from .grid import EVEN, ODD, axis_fill


def levi_civita(n):
    eps = np.zeros((n,) * n)
    for perm in itertools.permutations(range(n)):
        inv = sum(1 for i in range(n) for j in range(i + 1, n) if perm[i] > perm[j])
        eps[perm] = -1.0 if inv % 2 else 1.0
    return eps


def component_parity(index):
    return ODD if sum(1 for i in index if i == 0) % 2 else EVEN


def pad_axis(t, extra_parity=EVEN):
    """Prepend an axis row to a sliced tensor, filling by component parity."""
    lead = t.shape[:-2]
    out = np.empty(lead + (t.shape[-2] + 1, t.shape[-1]))
    out[..., 1:, :] = t
    for index in itertools.product(*(range(k) for k in lead)):
        par = component_parity(index) * extra_parity
        out[index] = axis_fill(out[index], par)
    return out


def raise_all(omega, ginv, p):
    out = omega
    for k in range(p):
        out = np.moveaxis(np.einsum("ab...,b...->a...", ginv, np.moveaxis(out, k, 0)), 0, k)
    return out


def hodge(omega, p, ginv, sqrtg, eps):
    """Hodge dual of a p-form with eps the permutation symbol of the orientation."""
    n = eps.shape[0]
    up = raise_all(omega, ginv, p)
    letters = "abcdefgh"
    src = letters[:p]
    rest = letters[p:n]
    out = np.einsum(f"{src}{rest},{src}...->{rest}...", eps, up)
    return out * sqrtg / math.factorial(p)


def wedge(alpha, p, beta, q):
    """Wedge product of a p-form and a q-form (component convention with 1/p!)."""
    n = alpha.shape[0] if p else beta.shape[0]
    if p == 0:
        return alpha * beta
    if q == 0:
        return beta * alpha
    grid_shape = alpha.shape[p:]
    out = np.zeros((n,) * (p + q) + grid_shape)
    letters = "abcdefgh"
    a = letters[:p]
    b = letters[p:p + q]
    prod = np.einsum(f"{a}...,{b}...->{a}{b}...", alpha, beta)
    for perm in itertools.permutations(range(p + q)):
        inv = sum(1 for i in range(p + q) for j in range(i + 1, p + q) if perm[i] > perm[j])
        sgn = -1.0 if inv % 2 else 1.0
        out += sgn * np.moveaxis(prod, list(range(p + q)), list(perm))
    return out / (math.factorial(p) * math.factorial(q))


def interior(x, omega):
    """Contract the vector x into the first slot of a form."""
    extra = omega.ndim - x.ndim
    xs = x.reshape(x.shape[:1] + (1,) * extra + x.shape[1:])
    return (xs * omega).sum(axis=0)


def killing_vector(n, l, grid_shape):
    v = np.zeros((n,) + grid_shape)
    v[2 + l] = 1.0
    return v


def d_scalar(f, grid, n, parity=EVEN):
    """Coordinate differential (length-n covector) of a full-grid scalar, sliced off the axis."""
    out = np.zeros((n,) + f[1:].shape)
    out[0] = grid.d_rho(f, parity)[1:]
    out[1] = grid.d_z(f)[1:]
    return out


def divergence(x, sqrtg, grid):
    """(1/sqrt g) d_a (sqrt g x^a) for a sliced vector field x (a in rho, z)."""
    fr = pad_axis(sqrtg * x[0], EVEN)
    fz = pad_axis(sqrtg * x[1], ODD)
    num = grid.d_rho(fr, EVEN) + grid.d_z(fz)
    return num[1:] / sqrtg


def exterior_d1(y, grid):
    """d of a sliced 1-form y whose components depend on (rho, z) only."""
    n = y.shape[0]
    full = pad_axis(y)
    out = np.zeros((n, n) + y.shape[1:])
    for mu in range(n):
        par = component_parity((mu,))
        dr = grid.d_rho(full[mu], par)[1:]
        dz = grid.d_z(full[mu])[1:]
        out[0, mu] += dr
        out[mu, 0] -= dr
        out[1, mu] += dz
        out[mu, 1] -= dz
    return out
