"""Independent oracle values for the test suite, frozen into frozen.json.

Run once with sympy, mpmath and scipy available:

    python3 tests/oracles/make_oracles.py

Nothing here imports the package; the tests only read frozen.json.
"""

import json
from pathlib import Path

import mpmath as mp
import numpy as np
import sympy as sp
from scipy.integrate import solve_bvp, solve_ivp

mp.mp.dps = 30
out = {}
rho, z = sp.symbols("rho z", positive=True)
r = sp.sqrt(rho ** 2 + z ** 2)


def lap3(f):
    return sp.diff(f, rho, 2) + sp.diff(f, rho) / rho + sp.diff(f, z, 2)


def brill_R(U, al):
    return sp.exp(2 * U - 2 * al) * (4 * lap3(U) - 2 * (sp.diff(al, rho, 2) + sp.diff(al, z, 2))
                                     - 2 * (sp.diff(U, rho) ** 2 + sp.diff(U, z) ** 2))


# nodes of the uniform grid Grid2D(421, 802, 21.0, 20.025) (spacing 0.05 in both directions)
pts = [(0.7, 0.325), (1.3, -0.825), (3.0, 2.025), (5.0, -3.975)]

# Schwarzschild: R = 0 identically; frame coefficient; mean curvature of r = r0
m = sp.Integer(1)
U_s = -2 * sp.log(1 + m / (2 * r))
out["schwarzschild_R_at_points"] = [float(brill_R(U_s, 0).subs({rho: a, z: b})) for a, b in pts]
out["schwarzschild_e1_at_r10"] = float((1 + sp.Rational(1, 20)) ** -2)
R_ = sp.symbols("R", positive=True)
psi = 1 + m / (2 * R_)
H = 4 * sp.diff(psi, R_) / psi ** 3 + 2 / (R_ * psi ** 2)      # div of psi^-2 d_r in psi^4 delta
out["schwarzschild_H_r5"] = float(H.subs(R_, 5))
psi0 = psi.subs(R_, 4)
out["flat_fill_jump_r4"] = float(2 / (4 * psi0 ** 2) - H.subs(R_, 4))

# Reissner-Nordstrom m = 1, q = 1/2: R = 2|E|^2 (time symmetric, Coulomb field)
q = sp.Rational(1, 2)
U_rn = -sp.log(1 + m / r + (m * m - q * q) / (4 * r * r))
chi = -q * z / r
E2 = sp.exp(4 * U_rn) / rho ** 2 * (sp.diff(chi, rho) ** 2 + sp.diff(chi, z) ** 2)
out["rn_hamiltonian_at_points"] = [float((brill_R(U_rn, 0) - 2 * E2).subs({rho: a, z: b}))
                                   for a, b in pts]
out["rn_R_at_points"] = [float(brill_R(U_rn, 0).subs({rho: a, z: b})) for a, b in pts]

# extreme Kerr J = 1 (m = a = 1) canonical slice, r_BL = r + m
a = m
c = z / r
s2 = rho ** 2 / r ** 2
rb = r + m
sig = rb ** 2 + a ** 2 * c ** 2
num = (rb ** 2 + a ** 2) ** 2 - a ** 2 * r ** 2 * s2
U_k = -sp.log(num / (sig * r ** 2)) / 2
al_k = sp.log(sig ** 2 / num) / 2
zeta = (c ** 3 - 3 * c) - a ** 2 * c * s2 ** 2 / sig
k2 = 2 * sp.exp(6 * U_k - 2 * al_k) / rho ** 4 * (sp.diff(zeta, rho) ** 2 + sp.diff(zeta, z) ** 2)
R_k = brill_R(U_k, al_k)
out["kerr_R_at_points"] = [float(R_k.subs({rho: x, z: y})) for x, y in pts]
out["kerr_hamiltonian_at_points"] = [float((R_k - k2).subs({rho: x, z: y})) for x, y in pts]
out["points"] = pts

# harmonic energy: Schwarzschild and RN reduce to radial integrals
rr = sp.symbols("r", positive=True)
Us = -2 * sp.log(1 + 1 / (2 * rr))
I_s = mp.quad(sp.lambdify(rr, sp.Rational(1, 2) * rr ** 2 * sp.diff(Us, rr) ** 2, "mpmath"), [0, 1, mp.inf])
out["schwarzschild_I"] = float(I_s)
Urn = -sp.log(1 + 1 / rr + (1 - q * q) / (4 * rr * rr))
# (1/8 pi) int (U_r^2 + e^{2U} rho^-2 |grad chi|^2) dV, |grad chi|^2 = q^2 sin^2 / r^2
integrand = sp.Rational(1, 2) * (rr ** 2 * sp.diff(Urn, rr) ** 2 + sp.exp(2 * Urn) * q * q / rr ** 2)
out["rn_I"] = float(mp.quad(sp.lambdify(rr, integrand, "mpmath"), [0, 1, mp.inf]))

# extreme Kerr I by 2-d quadrature of the closed-form density in (r, theta)
dens = (sp.diff(U_k, rho) ** 2 + sp.diff(U_k, z) ** 2
        + sp.exp(4 * U_k) / rho ** 4 * (sp.diff(zeta, rho) ** 2 + sp.diff(zeta, z) ** 2))
fk = sp.lambdify((rho, z), dens, "numpy", cse=True)


def kerr_I(nx, nt):
    # r = x / (1 - x) on (0, 1), tensor Gauss-Legendre, upper hemisphere doubled
    x, wx = np.polynomial.legendre.leggauss(nx)
    t, wt = np.polynomial.legendre.leggauss(nt)
    x, wx = 0.5 * (x + 1), 0.5 * wx
    t, wt = 0.25 * np.pi * (t + 1), 0.25 * np.pi * wt
    X_, T_ = np.meshgrid(x, t, indexing="ij")
    rad = X_ / (1 - X_)
    f = fk(rad * np.sin(T_), rad * np.cos(T_)) * rad ** 2 * np.sin(T_) / (1 - X_) ** 2
    # (1/8 pi) * 2 pi * 2 hemispheres
    return 0.5 * np.einsum("i,j,ij->", wx, wt, f)


kI = [kerr_I(n, n) for n in (200, 400)]
assert abs(kI[1] - kI[0]) < 1e-10, kI
out["kerr_I"] = float(kI[1])
print("kerr", kI, flush=True)

# flat ball: Lap u + q u = 0 for r < R, u = 1 + A/r outside; shoot from the series at r -> 0
def ball_A(qv, Rv=1.0):
    k = np.sqrt(qv) * Rv
    closed = Rv * (np.tan(k) / k - 1)
    r0 = 1e-4
    y0 = [1 - qv * r0 ** 2 / 6, -qv * r0 / 3]
    sol = solve_ivp(lambda x, y: [y[1], -2 * y[1] / x - qv * y[0]], (r0, Rv), y0,
                    method="DOP853", rtol=1e-13, atol=1e-15)
    u1, du1 = sol.y[:, -1]
    # u = s * (u1 inside); match s u1 = 1 + A/R and s du1 = -A/R^2
    s = 1 / (u1 + Rv * du1)
    A = -s * du1 * Rv ** 2
    assert abs(A - closed) < 1e-10, (A, closed)
    return float(A)


out["flat_ball_A"] = {"0.5": ball_A(0.5), "1.0": ball_A(1.0)}

# complex hyperbolic distances by a geodesic BVP on Christoffel symbols from sympy
X = sp.symbols("V zeta chi psi")
rh = sp.symbols("rho_", positive=True)
V, ze, ch, ps = X
W = [0, 1, ps, -ch]
A_ = sp.exp(4 * V) / rh ** 4
B_ = sp.exp(2 * V) / rh ** 2
G = sp.Matrix(4, 4, lambda i, j: A_ * W[i] * W[j] + (1 if i == j == 0 else 0)
              + (B_ if i == j and i >= 2 else 0))
Gi = G.inv()
Gam = [[[(sum(Gi[k, l] * (sp.diff(G[l, i], X[j]) + sp.diff(G[l, j], X[i])
                                        - sp.diff(G[i, j], X[l])) for l in range(4)) / 2)
         for j in range(4)] for i in range(4)] for k in range(4)]
gam_f = sp.lambdify((X, rh), Gam, "numpy", cse=True)
G_f = sp.lambdify((X, rh), G, "numpy")


def christoffel(x, rho_v):
    raw = gam_f(list(x), rho_v)
    n_ = x.shape[1]
    return np.array([[[np.broadcast_to(np.asarray(e, float), (n_,)) for e in row] for row in blk]
                     for blk in raw])


def bvp_distance(p, q_, rho_v):
    p, q_ = np.array(p, float), np.array(q_, float)
    s = np.linspace(0, 1, 81)

    def rhs(_, y):
        g = christoffel(y[:4], rho_v)
        return np.vstack([y[4:], -np.einsum("kijn,in,jn->kn", g, y[4:], y[4:])])

    y0 = np.vstack([p[:, None] + (q_ - p)[:, None] * s, np.repeat((q_ - p)[:, None], s.size, 1)])
    sol = solve_bvp(rhs, lambda ya, yb: np.concatenate([ya[:4] - p, yb[:4] - q_]), s, y0, tol=1e-9,
                    max_nodes=100000)
    assert sol.success, sol.message
    x, w = np.polynomial.legendre.leggauss(80)
    yy = sol.sol(0.5 * (x + 1))
    speed = [np.sqrt(yy[4:, i] @ np.array(G_f(yy[:4, i], rho_v), float) @ yy[4:, i])
             for i in range(x.size)]
    return float(0.5 * np.dot(w, speed))


rng = np.random.default_rng(7)
dist = []
for _ in range(5):
    p = rng.uniform(-0.5, 0.5, 4)
    q_ = p + rng.uniform(-0.3, 0.3, 4)
    rho_v = float(rng.uniform(0.5, 2.0))
    dist.append({"p": p.tolist(), "q": q_.tolist(), "rho": rho_v, "d": bvp_distance(p, q_, rho_v)})
out["chc_distances"] = dist

out["ineq_b_rhs_m1_J05_05"] = float(27 * mp.pi / 32)
out["spike_kappa"] = float(1 / (8 * mp.pi))

Path(__file__).with_name("frozen.json").write_text(json.dumps(out, indent=1) + "\n")
print(json.dumps(out, indent=1))
