import json
from pathlib import Path

import numpy as np
import pytest

from cornermass.brill import make_schwarzschild
from cornermass.corner import Surface, collar, glue, radial_fill, vacuum_side
from cornermass.grid import Grid2D

ORACLES = json.loads((Path(__file__).parent / "oracles" / "frozen.json").read_text())
CONFIGS = Path(__file__).resolve().parents[1] / "configs"


@pytest.fixture(scope="session")
def oracle():
    return ORACLES


@pytest.fixture(scope="session")
def grid64():
    return Grid2D.stretched(64, 128, 100.0, 0.05)


@pytest.fixture(scope="session")
def grid128():
    return Grid2D.stretched(128, 256, 100.0, 0.02)


@pytest.fixture(scope="session")
def glue_grid():
    return Grid2D.stretched(96, 192, 200.0, 0.05)


@pytest.fixture(scope="session")
def schw_outer(glue_grid):
    return make_schwarzschild(glue_grid, 1.0)


@pytest.fixture(scope="session")
def schw_corner(schw_outer):
    """Flat fill inside r0 = 4 glued to Schwarzschild m = 1 outside."""
    inner = vacuum_side(radial_fill(schw_outer, 4.0))
    return glue(inner, vacuum_side(schw_outer), Surface(4.0))


@pytest.fixture(scope="session")
def schw_chart(schw_corner):
    return collar(schw_corner, 0.5, n_theta=16)


@pytest.fixture(scope="session")
def doubled_corner(schw_outer):
    """Inner fill with slope -d_r U_out at r0, which doubles H_- - H_+."""
    r0 = 4.0
    dU = (1.0 / r0 ** 2) / (1 + 1.0 / (2 * r0))
    inner = vacuum_side(radial_fill(schw_outer, r0, -dU))
    c = glue(inner, vacuum_side(schw_outer), Surface(r0))
    return c, collar(c, 0.5, n_theta=16)


def rel(a, b):
    return abs(a - b) / max(abs(b), 1e-300)


def order(hs, errs):
    return float(np.polyfit(np.log(hs), np.log(errs), 1)[0])
