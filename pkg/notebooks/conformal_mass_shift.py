# %% [markdown]
# Conformal correction and the mass shift
# =======================================
#
# A model coefficient q on the unit ball: Lap u + q u = 0 with u -> 1 far
# away.  The far field is u = 1 + A/r, so u^4 delta has ADM mass 2A.

# %%
from cornermass.brill import make_flat
from cornermass.conformal import flat_ball_exact, flat_ball_problem, solve, transform
from cornermass.grid import Grid2D
from cornermass.mass_energy import adm_mass

for q in (0.25, 0.5, 1.0):
    sol = solve(flat_ball_problem(q))
    print(f"q={q:<5} A_volume={sol.A_volume:.6f} A_fit={sol.A_fit:.6f} exact={flat_ball_exact(q):.6f}"
          f" min u={sol.u.min():.6f}")

# %%
sol = solve(flat_ball_problem(0.5))
data = make_flat(Grid2D.stretched(64, 128, 100.0, 0.05))
tdata, u = transform(None, sol).on_grid(data)
print("ADM mass of u^4 delta:", adm_mass(tdata)[0], " 2A:", sol.mass_shift)
