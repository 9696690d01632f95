"""Resonance poles and bound states in the continuum of a 1D three-body system.

Two identical bosons of mass ``beta`` and a distinguishable particle of
unit mass interact through Gaussian boson-particle potentials. The
three-body problem is solved in a Gaussian expansion basis over two
rearrangement channels with complex scaling.
"""

__version__ = "0.1.0"

from .basis import BasisSpec, GaussBasis, build_basis
from .eigen import SpectrumPoint, Thresholds, Tolerances, classify, solve_generalized
from .matel import MatrixPair, assemble, assemble_sector
from .model import SystemParams, jacobi_transform, potential, reduced_masses
from .trace import PoleTrajectory, SweepSpec, refine_bic, sweep, width_profile
from .twobody import solve2b_gem, solve2b_grid, thresholds

__all__ = [
    "BasisSpec", "GaussBasis", "build_basis",
    "SpectrumPoint", "Thresholds", "Tolerances", "classify", "solve_generalized",
    "MatrixPair", "assemble", "assemble_sector",
    "SystemParams", "jacobi_transform", "potential", "reduced_masses",
    "PoleTrajectory", "SweepSpec", "refine_bic", "sweep", "width_profile",
    "solve2b_gem", "solve2b_grid", "thresholds",
]
