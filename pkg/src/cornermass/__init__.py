"""Corner smoothing of axisymmetric Einstein-Maxwell initial data."""

__version__ = "0.1.0"

from .grid import Grid2D
from .brill import (BrillData, Fields, Geometry, frame, make_extreme_kerr, make_flat,
                    make_plummer, make_reissner_nordstrom, make_schwarzschild, mean_curvature,
                    scalar_curvature)
from .potentials import ChargeRecord, PotentialSet, charges, reconstruct_fields
from .tphi import TPhiData, reduce, verify_identities
from .corner import CornerData, Surface, collar, glue, radial_fill, vacuum_side
from .smoothing import SmoothedData, assemble, mollify_path, spike_check
from .conformal import ConformalData, ConformalSolution, PolarProblem, smoothed_problem, solve, transform
from .mass_energy import (HarmonicMapPoint, InequalityVerdict, adm_mass, chc_distance,
                          check_inequality, harmonic_energy, mass_decomposition)

__all__ = [
    "Grid2D", "BrillData", "Fields", "Geometry", "frame", "make_extreme_kerr", "make_flat",
    "make_plummer", "make_reissner_nordstrom", "make_schwarzschild", "mean_curvature",
    "scalar_curvature", "ChargeRecord", "PotentialSet", "charges", "reconstruct_fields",
    "TPhiData", "reduce", "verify_identities", "CornerData", "Surface", "collar", "glue",
    "radial_fill", "vacuum_side", "SmoothedData", "assemble", "mollify_path", "spike_check",
    "ConformalData", "ConformalSolution", "PolarProblem", "smoothed_problem", "solve",
    "transform", "HarmonicMapPoint", "InequalityVerdict", "adm_mass", "chc_distance",
    "check_inequality", "harmonic_energy", "mass_decomposition",
]
