"""Config-driven pipeline: gen -> glue -> reduce -> smooth -> conformal -> mass -> check.

Every stage writes CSV (and BRILL1 where fields are involved) into the output
directory and records itself in manifest.json.  A stage reloads the seed from
seed.b1, so any stage can be rerun once its predecessors have run.
"""

from __future__ import annotations

import configparser
import hashlib
import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from . import io as bio
from .errors import ConfigError, CornerMassError, DataIntegrityError, StageError

STAGES = ("gen", "glue", "reduce", "smooth", "conformal", "mass", "check")
SEEDS = ("flat", "schwarzschild", "plummer", "reissner_nordstrom", "extreme_kerr", "file")

# acceptance-grade thresholds used by verify (scaled by the tolerance scale)
U_FLOOR = 1e-8
MU_FLOOR = 1e-8
A_AGREE = 0.02
SHIFT_AGREE = 0.01
KAPPA_SCATTER = 0.05
ORDER_MIN = 1.8
ZERO = 1e-6


@dataclass(frozen=True)
class PipelineConfig:
    seed: dict
    grid: dict
    corner: dict = None
    deltas: tuple = ()
    n_stations: int = 8
    conformal: dict = field(default_factory=dict)
    tol_scale: float = 1.0
    hypothesis: bool = False
    out: Path = Path("out")

    def canonical(self):
        """Hash-stable description (the output directory is not part of it)."""
        d = {"seed": self.seed, "grid": self.grid, "corner": self.corner,
             "deltas": list(self.deltas), "n_stations": self.n_stations,
             "conformal": self.conformal, "tol_scale": self.tol_scale,
             "hypothesis": self.hypothesis}
        return json.dumps(d, sort_keys=True)

    @property
    def digest(self):
        return hashlib.sha256(self.canonical().encode()).hexdigest()


def _num(v):
    try:
        x = float(v)
    except ValueError:
        return v
    return int(x) if x.is_integer() and "." not in v and "e" not in v.lower() else x


def parse_deltas(text):
    try:
        vals = tuple(float(x) for x in str(text).replace(",", " ").split())
    except ValueError:
        raise ConfigError(f"delta list {text!r} is not numeric") from None
    if not vals:
        raise ConfigError("empty delta list")
    if any(d <= 0 for d in vals):
        raise ConfigError("delta values must be positive")
    if any(b >= a for a, b in zip(vals, vals[1:])):
        raise ConfigError("delta values must be strictly decreasing")
    return vals


def parse_grid(text):
    parts = [p for p in str(text).replace("x", ",").split(",") if p.strip()]
    if not 2 <= len(parts) <= 4:
        raise ConfigError("grid is n_rho,n_z[,r_max[,h_min]]")
    keys = ("n_rho", "n_z", "r_max", "h_min")
    return {k: _num(p.strip()) for k, p in zip(keys, parts)}


def load_config(path=None, text=None, delta=None, grid=None, out=None, tol_scale=None):
    """Read an INI config; command-line overrides win over file values."""
    cp = configparser.ConfigParser()
    if path is not None:
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"config file {path} not found")
        cp.read(path)
        base = path.parent
    elif text is not None:
        cp.read_string(text)
        base = Path(".")
    else:
        raise ConfigError("need a config file")
    if "seed" not in cp:
        raise ConfigError("config lacks a [seed] section")
    seed = {k: _num(v) for k, v in cp["seed"].items()}
    kind = seed.get("kind")
    if kind not in SEEDS:
        raise ConfigError(f"unknown seed kind {kind!r}")
    if kind == "file":
        f = Path(seed.get("path", ""))
        f = f if f.is_absolute() else base / f
        if not f.exists():
            raise ConfigError(f"seed file {f} not found")
        seed["path"] = str(f.resolve())
    g = {"n_rho": 96, "n_z": 192, "r_max": 200.0, "h_min": 0.05}
    if "grid" in cp:
        g.update({k: _num(v) for k, v in cp["grid"].items()})
    if grid is not None:
        g.update(parse_grid(grid))
    try:
        g = {"n_rho": int(g["n_rho"]), "n_z": int(g["n_z"]), "r_max": float(g["r_max"]),
             "h_min": float(g["h_min"])}
    except ValueError:
        raise ConfigError(f"grid values {g} are not numeric") from None
    corner = None
    if "corner" in cp:
        c = cp["corner"]
        corner = {"r0": float(c.get("r0", "4.0")), "slope_factor": float(c.get("slope_factor", "0")),
                  "n_theta": int(c.get("n_theta", "16")), "eps": float(c.get("eps", "0.5")),
                  "n_cheb": int(c.get("n_cheb", "33"))}
        if corner["r0"] <= 0 or corner["eps"] <= 0:
            raise ConfigError("corner radius and collar width must be positive")
    sm = cp["smoothing"] if "smoothing" in cp else {}
    deltas = ()
    if delta is not None:
        deltas = parse_deltas(delta)
    elif "deltas" in sm:
        deltas = parse_deltas(sm["deltas"])
    if deltas and corner is None:
        raise ConfigError("smoothing needs a [corner] section")
    if corner is not None and deltas and deltas[0] > corner["eps"]:
        raise ConfigError("delta must not exceed the collar width eps")
    n_st = int(sm.get("n_stations", "8"))
    conf = {"inner_bc": "regular", "n_core": 96, "ratio": 1.08}
    if "conformal" in cp:
        conf.update({k: _num(v) for k, v in cp["conformal"].items()})
    if conf["inner_bc"] not in ("regular", "neumann", "dirichlet"):
        raise ConfigError(f"unknown boundary regime {conf['inner_bc']!r}")
    ts = float(cp.get("tolerance", "scale", fallback="1.0"))
    if tol_scale is not None:
        ts = float(tol_scale)
    if ts <= 0:
        raise ConfigError("tolerance scale must be positive")
    hyp = cp.getboolean("hypothesis", "mean_curvature", fallback=False)
    o = Path(out) if out is not None else Path(cp.get("output", "dir", fallback="out"))
    if not o.is_absolute() and path is not None and out is None:
        o = base / o
    return PipelineConfig(seed, g, corner, deltas, n_st, conf, ts, hyp, o)


# -- seeds ----------------------------------------------------------------------

def make_grid(cfg):
    from .grid import Grid2D

    g = cfg.grid
    return Grid2D.stretched(g["n_rho"], g["n_z"], g["r_max"], g["h_min"])


def make_seed(cfg, grid=None):
    """(data, pots, fields) of the configured seed."""
    from . import brill
    from .brill import Fields
    from .potentials import PotentialSet, reconstruct_fields

    s = cfg.seed
    kind = s["kind"]
    if kind == "file":
        data, pots, fields, _ = bio.load_data(s["path"])
        pots = pots if pots is not None else PotentialSet.zeros(data)
        fields = fields if fields is not None else Fields.zeros(data)
        return data, pots, fields
    grid = grid or make_grid(cfg)
    if kind == "flat":
        data = brill.make_flat(grid)
    elif kind == "schwarzschild":
        data = brill.make_schwarzschild(grid, float(s.get("m", 1.0)))
    elif kind == "plummer":
        data = brill.make_plummer(grid, float(s.get("m", 1.0)), float(s.get("s", 1.0)))
    elif kind == "reissner_nordstrom":
        data, pots, fields = brill.make_reissner_nordstrom(
            grid, float(s.get("m", 1.0)), float(s.get("q", 0.5)),
            str(s.get("magnetic", "false")).lower() == "true")
        return data, pots, fields
    else:
        data, pots = brill.make_extreme_kerr(grid, float(s.get("j", 1.0)))
        return data, pots, reconstruct_fields(data, pots)
    return data, PotentialSet.zeros(data), Fields.zeros(data)


def _is_vacuum(cfg):
    return cfg.seed["kind"] in ("flat", "schwarzschild", "extreme_kerr")


# -- manifest ---------------------------------------------------------------------

def _sha(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


class Run:
    """Output directory plus lazily rebuilt stage inputs."""

    def __init__(self, cfg: PipelineConfig):
        self.cfg = cfg
        self.out = Path(cfg.out)
        self.out.mkdir(parents=True, exist_ok=True)
        self._cache = {}
        mf = self.out / "manifest.json"
        self.manifest = json.loads(mf.read_text()) if mf.exists() else {}
        if self.manifest.get("config_hash") != cfg.digest:
            self.manifest = {"config_hash": cfg.digest, "version": __version__,
                             "config": json.loads(cfg.canonical()), "stages": {}}
        tf = self.out / "timings.json"
        self.timings = json.loads(tf.read_text()) if tf.exists() else {}

    def path(self, name):
        return self.out / name

    def write_csv(self, name, header, rows):
        bio.write_csv(self.path(name), header, rows)
        return name

    def record(self, stage, files, summary, verdicts=None, seconds=0.0):
        self.manifest["stages"][stage] = {
            "files": {f: _sha(self.path(f)) for f in sorted(files)},
            "summary": summary, "verdicts": verdicts or {}}
        self.timings[stage] = round(seconds, 3)
        self.path("manifest.json").write_text(json.dumps(self.manifest, indent=1, sort_keys=True) + "\n")
        self.path("timings.json").write_text(json.dumps(self.timings, indent=1, sort_keys=True) + "\n")

    def need(self, stage):
        if stage not in self.manifest["stages"]:
            raise ConfigError(f"stage {stage!r} has not run for this config; run it first")

    # cached inputs
    def seed(self):
        if "seed" not in self._cache:
            self.need("gen")
            data, pots, fields, _ = bio.load_data(self.path("seed.b1"))
            if self.cfg.seed["kind"] != "file":
                # reattach the closed form after checking it reproduces the file
                d2, _, _ = make_seed(self.cfg, data.grid)
                if not np.array_equal(d2.U, data.U) or not np.array_equal(d2.alpha, data.alpha):
                    raise DataIntegrityError("seed.b1 does not match the configured seed")
                data = d2
            self._cache["seed"] = (data, pots, fields)
        return self._cache["seed"]

    def corner(self):
        if "corner" not in self._cache:
            self._cache["corner"] = build_corner(self.cfg, *self.seed()[:2])
        return self._cache["corner"]

    def chart(self):
        if "chart" not in self._cache:
            from .corner import collar

            c = self.cfg.corner
            self._cache["chart"] = collar(self.corner(), c["eps"], n_theta=c["n_theta"],
                                          n_cheb=c["n_cheb"])
        return self._cache["chart"]

    def conformal(self, delta):
        key = ("conf", delta)
        if key not in self._cache:
            from .conformal import smoothed_problem, solve, transform
            from .smoothing import assemble

            sd = assemble(self.corner(), self.chart(), delta)
            c = self.cfg.conformal
            p = smoothed_problem(sd, n_core=int(c["n_core"]), ratio=float(c["ratio"]),
                                 inner_bc=c["inner_bc"])
            sol = solve(p)
            self._cache[key] = transform(sd, sol)
        return self._cache[key]


def _coulomb_fill(data, arr, r0, Z):
    """Continue a trace -q cos(theta) on r = r0 inside as the uniform-field potential -q z / r0."""
    from scipy.interpolate import RectBivariateSpline

    th = np.linspace(0.1, np.pi - 0.1, 9)
    tr = RectBivariateSpline(data.grid.rho, data.grid.z, arr).ev(r0 * np.sin(th), r0 * np.cos(th))
    q = -float(np.polyfit(np.cos(th), tr, 1)[0])
    return -q * Z / r0


def build_corner(cfg, data, pots):
    """Glue a radial fill inside r0 to the seed outside."""
    from .corner import Surface, glue, radial_fill, vacuum_side
    from .potentials import PotentialSet

    c = cfg.corner
    if c is None:
        raise ConfigError("no [corner] section in the config")
    if data.exact is None:
        raise ConfigError("gluing needs a seed with a closed form")
    r0 = c["r0"]
    h = 1e-6 * r0
    ex = data.exact(np.array([r0 + h, r0 - h]), np.zeros(2))
    d_out = float(ex["U"][0] - ex["U"][1]) / (2 * h)
    fill = radial_fill(data, r0, slope=c["slope_factor"] * d_out)
    _, Z = fill.grid.mesh()
    zero = np.zeros(fill.grid.shape)
    pin = None
    if np.any(pots.chi != 0) or np.any(pots.psi != 0) or np.any(pots.zeta != 0):
        if np.any(pots.zeta != 0):
            raise ConfigError("gluing supports static seeds only")
        pin = PotentialSet(zeta=zero[None].copy(), chi=_coulomb_fill(data, pots.chi, r0, Z),
                           psi=_coulomb_fill(data, pots.psi[0], r0, Z)[None])
    # grid-sampled potentials are compared through splines; their traces agree only to the
    # interpolation floor, so charged corners get a tolerance relative to the trace size
    pot_tol = 1e-8
    if pin is not None:
        pot_tol = 1e-6 * max(1.0, float(np.abs(pots.chi).max()), float(np.abs(pots.psi).max()))
    return glue(vacuum_side(fill, pin), vacuum_side(data, pots if pin is not None else None),
                Surface(r0), pot_tol=pot_tol)


# -- stages -----------------------------------------------------------------------

def stage_gen(run: Run):
    from .potentials import charge_rows, charges

    data, pots, fields = make_seed(run.cfg)
    bio.save_data(run.path("seed.b1"), data, pots, fields)
    flux, axis = charges(data, pots, fields)
    run.write_csv("charges.csv", ("quantity", "method", "value", "radius", "error"),
                  charge_rows([flux, axis]))
    run._cache["seed"] = (data, pots, fields)
    run._cache["charges"] = (flux, axis)
    summary = {"m": flux.m, "J": list(flux.J), "Qe": flux.Qe, "Qb": flux.Qb,
               "label": data.label}
    return ["seed.b1", "charges.csv"], summary, {}


def stage_glue(run: Run):
    cd = run.corner()
    rows = [(float(t), float(a), float(b), float(a - b))
            for t, a, b in zip(cd.theta, cd.H_minus, cd.H_plus)]
    run.write_csv("corner.csv", ("theta", "H_minus", "H_plus", "jump"), rows)
    jmin = float(cd.jump.min())
    verdicts = {"mean_curvature_jump": "holds" if jmin >= 0 else "violated"}
    summary = {"jump_min": jmin, "jump_max": float(cd.jump.max()),
               "report": cd.report, "hypothesis": run.cfg.hypothesis}
    return ["corner.csv"], summary, verdicts


def _identity_rows(label, data, pots, fields, coarse):
    from .tphi import reduce, verify_identities

    td = reduce(data, fields, pots, check=False)
    rep = verify_identities(td)
    rows = []
    rep_c = verify_identities(reduce(*coarse, check=False)) if coarse is not None else {}
    h = float(data.grid.h_max)
    for k in sorted(rep):
        if k in rep_c and rep[k] > 0 and rep_c[k] > 0:
            order = math.log(rep_c[k] / rep[k]) / math.log(2.0)
        else:
            order = float("nan")
        rows.append((label, k, rep[k], h, order))
    return rows


def _coarse_seed(cfg):
    g = dict(cfg.grid)
    g["n_rho"] = (g["n_rho"] + 1) // 2
    g["n_z"] = (g["n_z"] + 1) // 2
    g["h_min"] = 2 * g["h_min"]
    from .grid import Grid2D

    grid = Grid2D.stretched(g["n_rho"], g["n_z"], g["r_max"], g["h_min"])
    d, p, f = make_seed(cfg, grid)
    return d, f, p


def stage_reduce(run: Run):
    data, pots, fields = run.seed()
    coarse = None
    if run.cfg.seed["kind"] != "file":
        coarse = _coarse_seed(run.cfg)
    rows = _identity_rows("seed", data, pots, fields, coarse)
    run.write_csv("reduce.csv", ("side", "identity", "norm", "resolution", "order"), rows)
    summary = {f"{r[0]}:{r[1]}": r[2] for r in rows}
    return ["reduce.csv"], summary, {}


def stage_smooth(run: Run):
    from .smoothing import SmoothedCollar, spike_check

    cfg = run.cfg
    if not cfg.deltas:
        raise ConfigError("no delta values configured")
    cd, chart = run.corner(), run.chart()
    rep = spike_check(cd, chart, cfg.deltas, cfg.n_stations)
    rows = [(d, th, s, 0.0, j, rep.kappa) for d, th, j, s, k in rep.table]
    run.write_csv("sweep.csv", ("delta", "station", "spike_integral", "background",
                                "H_jump", "kappa_fit"), rows)
    j = int(np.argmin(np.abs(chart.theta - np.pi / 2)))
    prof = []
    for d in cfg.deltas:
        sc = SmoothedCollar(chart, d)
        t = np.linspace(-0.6 * d, 0.6 * d, 121)
        mu = sc.geometry(t)["mu_bar"][:, j]
        prof.extend((d, float(a), float(b)) for a, b in zip(t, mu))
    run.write_csv("spike_profile.csv", ("delta", "t", "mu_bar"), prof)
    summary = {"kappa": rep.kappa, "scatter": rep.scatter, "expected": rep.expected,
               "jacobian_min": float(chart.jacobian_min)}
    return ["sweep.csv", "spike_profile.csv"], summary, {}


def stage_conformal(run: Run):
    cfg = run.cfg
    data = run.seed()[0]
    rows, files = [], []
    for d in cfg.deltas:
        cd = run.conformal(d)
        s = cd.solution
        p = s.problem
        gap = float(np.max(np.abs(cd.mu_tilde - cd.mu_tilde_direct))) if cd.mu_tilde.size else 0.0
        rows.append((d, s.A_volume, s.A_energy, s.A_fit, cd.min_u, cd.min_mu_tilde, gap,
                     len(s.history), s.history[-1] if s.history else 0.0, p.shape[0], p.shape[1]))
        name = f"u_{d:g}.b1"
        r, th = data.grid.polar()
        bio.write_brill1(run.path(name), data.grid, data.n, {"u": cd.u_at(r, th)}, {"delta": d})
        files.append(name)
    run.write_csv("conformal.csv", ("delta", "A_volume", "A_energy", "A_fit", "min_u",
                                    "min_mu_tilde", "mu_tilde_gap", "iterations", "residual",
                                    "n_t", "n_theta"), rows)
    summary = {"A": [r[1] for r in rows], "min_u": min(r[4] for r in rows)}
    return ["conformal.csv"] + files, summary, {}


def stage_mass(run: Run):
    from .mass_energy import adm_mass, harmonic_energy, mass_decomposition
    from .potentials import charges

    cfg = run.cfg
    data, pots, fields = run.seed()
    m0, e0 = adm_mass(data)
    rows = [("seed", 0.0, m0, e0, float("nan"), float("nan"))]
    q_rows = []
    if cfg.deltas and cfg.corner is not None:
        flux0, _ = charges(data, pots, fields, check=False)
        for d in cfg.deltas:
            cd = run.conformal(d)
            tdata, tfields, _ = cd.on_grid(data, fields)
            m1, e1 = adm_mass(tdata)
            two_a = 2 * cd.solution.A_volume
            rows.append(("conformal", d, m1, e1, m1 - m0, two_a))
            flux1, _ = charges(tdata, pots, tfields, check=False)
            q_rows.append((d, flux0.Qe, flux1.Qe, flux0.J[0], flux1.J[0]))
    run.write_csv("mass.csv", ("stage", "delta", "m", "error", "shift", "two_A"), rows)
    files = ["mass.csv"]
    if q_rows:
        run.write_csv("charges_transform.csv", ("delta", "Qe_before", "Qe_after",
                                                "J_before", "J_after"), q_rows)
        files.append("charges_transform.csv")
    erows = []
    if data.n == 3 and cfg.seed["kind"] != "file":
        I, eI = harmonic_energy(pots, data)
        erows.append(("I", I, eI))
        if _is_vacuum(cfg):
            dec = mass_decomposition(data, pots, np.zeros(data.grid.shape))
            erows += [("bulk", dec["bulk"], dec["error"]["bulk"]), ("m", dec["m"], dec["error"]["m"])]
    if erows:
        run.write_csv("energy.csv", ("quantity", "value", "error"), erows)
        files.append("energy.csv")
    summary = {"m_seed": m0, "m_delta": [r[2] for r in rows[1:]]}
    return files, summary, {}


def stage_check(run: Run):
    from .mass_energy import check_inequality
    from .potentials import ChargeRecord

    rows = bio.read_csv(run.path("charges.csv"))
    val = {(r["quantity"], r["method"]): r["value"] for r in rows}
    m = val.get(("m", "flux"))
    J = val.get(("J1", "flux"), 0.0)
    rec = ChargeRecord("flux", m, (J,), val.get(("Qe", "flux"), 0.0), val.get(("Qb", "flux"), 0.0))
    for k in ("Qe", "Qb"):
        if isinstance(getattr(rec, k), str) or (isinstance(getattr(rec, k), float)
                                                and math.isnan(getattr(rec, k))):
            rec = ChargeRecord(rec.method, rec.m, rec.J, 0.0 if k == "Qe" else rec.Qe,
                               0.0 if k == "Qb" else rec.Qb)
    v = check_inequality("a", rec)
    out = [("a", v.lhs, v.rhs, v.margin, v.margin / max(v.lhs, 1e-300) if v.lhs else 0.0,
            "holds" if v.holds else "violated")]
    run.write_csv("verdicts.csv", ("which", "lhs", "rhs", "margin", "relative_margin", "verdict"), out)
    text = v.certificate()
    if "glue" in run.manifest["stages"]:
        jm = run.manifest["stages"]["glue"]["summary"]["jump_min"]
        text += f"\nmean-curvature jump H- - H+ (min over Sigma) = {jm:.6e}"
    run.path("certificate.txt").write_text(text + "\n")
    return ["verdicts.csv", "certificate.txt"], {"margin": v.margin}, {"a": out[0][-1]}


STAGE_FUNCS = {"gen": stage_gen, "glue": stage_glue, "reduce": stage_reduce,
               "smooth": stage_smooth, "conformal": stage_conformal, "mass": stage_mass,
               "check": stage_check}


def applicable(cfg, stage):
    if stage in ("glue",) and cfg.corner is None:
        return False
    if stage in ("smooth", "conformal") and (cfg.corner is None or not cfg.deltas):
        return False
    return True


def run_stage(run: Run, stage):
    t0 = time.perf_counter()
    try:
        files, summary, verdicts = STAGE_FUNCS[stage](run)
    except CornerMassError as exc:
        raise StageError(stage, exc) from exc
    run.record(stage, files, summary, verdicts, time.perf_counter() - t0)


def run(cfg: PipelineConfig, upto="check"):
    """Run all applicable stages up to ``upto``; returns the manifest."""
    r = Run(cfg)
    for st in STAGES:
        if applicable(cfg, st):
            run_stage(r, st)
        if st == upto:
            break
    write_plot_scripts(r)
    return r.manifest


# -- plots --------------------------------------------------------------------------

_PLOTS = {
    "spike_profile": ("spike_profile.csv", "t", "mu_bar", "delta"),
    "A_delta": ("conformal.csv", "delta", "A_volume", None),
    "mass_delta": ("mass.csv", "delta", "m", None),
    "margins": ("verdicts.csv", "which", "relative_margin", None),
}

_SCRIPT = '''"""Plot {y} against {x} from {csv}.  Requires matplotlib."""
import csv
import sys
from collections import defaultdict
from pathlib import Path

import matplotlib.pyplot as plt

here = Path(__file__).resolve().parent.parent
rows = list(csv.DictReader(open(here / "{csv}")))
groups = defaultdict(list)
for r in rows:
    groups[r.get("{group}", "")].append(r)
fig, ax = plt.subplots()
for key, rs in groups.items():
    xs = [r["{x}"] for r in rs]
    ys = [float(r["{y}"]) for r in rs]
    if {bar}:
        ax.bar(xs, ys)
    else:
        ax.plot([float(x) for x in xs], ys, "o-", label=str(key) if key else None)
ax.set_xlabel("{x}")
ax.set_ylabel("{y}")
if len(groups) > 1:
    ax.legend(title="{group}")
fig.savefig(sys.argv[1] if len(sys.argv) > 1 else here / "plots" / "{name}.png", dpi=120)
'''


def write_plot_scripts(r: Run):
    d = r.path("plots")
    d.mkdir(exist_ok=True)
    for name, (csvname, x, y, group) in _PLOTS.items():
        if r.path(csvname).exists():
            (d / f"{name}.py").write_text(_SCRIPT.format(
                csv=csvname, x=x, y=y, group=group or "", name=name,
                bar="True" if name == "margins" else "False"))


# -- verify ----------------------------------------------------------------------

def verify(cfg: PipelineConfig):
    """List of failed checks (empty when every acceptance-grade invariant holds)."""
    out = Path(cfg.out)
    mf = out / "manifest.json"
    if not mf.exists():
        return [{"check": "outputs", "detail": f"no manifest in {out}"}]
    man = json.loads(mf.read_text())
    fails = []

    def fail(check, detail):
        fails.append({"check": check, "detail": detail})

    if man.get("config_hash") != cfg.digest:
        fail("config", "manifest was produced by a different config")
        return fails
    stages = man.get("stages", {})
    for st, rec in stages.items():
        for f, h in rec["files"].items():
            p = out / f
            if not p.exists():
                fail(f"integrity:{f}", "file missing")
            elif _sha(p) != h:
                fail(f"integrity:{f}", "contents differ from the manifest record")
    ts = cfg.tol_scale

    def rows(name):
        p = out / name
        return bio.read_csv(p) if p.exists() else []

    if cfg.seed["kind"] == "flat":
        for r in rows("charges.csv"):
            if isinstance(r["value"], float) and abs(r["value"]) > ZERO * ts:
                fail("flat:zero", f"{r['quantity']} ({r['method']}) = {r['value']:.3e}")
    for r in rows("reduce.csv"):
        if r["norm"] > 1e-8 * ts and not r["order"] >= ORDER_MIN / ts:
            fail("identities:order", f"{r['identity']} norm {r['norm']:.3e} order {r['order']}")
    if "glue" in stages:
        jumps = [r["jump"] for r in rows("corner.csv")]
        if cfg.hypothesis and jumps and min(jumps) < 0:
            fail("hypothesis:mean_curvature",
                 f"H- >= H+ is required on the gluing surface but min(H- - H+) = {min(jumps):.6e}")
    if "smooth" in stages:
        sw = rows("sweep.csv")
        for r in sw:
            k = r["spike_integral"] / r["H_jump"] if r["H_jump"] else float("nan")
            if not abs(k / r["kappa_fit"] - 1) <= KAPPA_SCATTER * ts:
                fail("spike:kappa", f"delta {r['delta']} station {r['station']:.4f}: {k:.6e}")
    if "conformal" in stages:
        cr = rows("conformal.csv")
        for r in cr:
            if r["min_u"] < 1 - U_FLOOR * ts:
                fail("conformal:u_min", f"delta {r['delta']}: min u = {r['min_u']!r}")
            if r["min_mu_tilde"] < -MU_FLOOR * ts:
                fail("conformal:mu_tilde", f"delta {r['delta']}: min mu~ = {r['min_mu_tilde']!r}")
            if r["A_volume"] != 0 and abs(r["A_fit"] / r["A_volume"] - 1) > A_AGREE * ts:
                fail("conformal:A_fit", f"delta {r['delta']}: fit {r['A_fit']!r} vs {r['A_volume']!r}")
        a = [abs(r["A_volume"]) for r in cr]
        if any(b >= c for c, b in zip(a, a[1:])):
            fail("conformal:A_decreasing", f"A_delta sequence {a}")
    if "mass" in stages:
        for r in rows("mass.csv"):
            if r["stage"] == "conformal" and r["two_A"] != 0:
                if abs(r["shift"] / r["two_A"] - 1) > SHIFT_AGREE * ts:
                    fail("mass:shift", f"delta {r['delta']}: shift {r['shift']!r} vs 2A {r['two_A']!r}")
    if "check" in stages:
        for r in rows("verdicts.csv"):
            margin = math.fsum([r["lhs"], -r["rhs"]])
            if abs(margin - r["margin"]) > 1e-12 * max(1.0, abs(r["lhs"])):
                fail("check:margin", f"({r['which']}) margin does not match lhs - rhs")
    return fails
