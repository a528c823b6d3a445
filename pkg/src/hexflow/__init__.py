"""Minimizing movements of hexagonal lattice interfaces and their limit flows."""

__version__ = "0.1.0"

from .atwstep import ALPHA_HEX, StepPlan, apply_plan, brute_force_step, optimal_layers, reduced_energy
from .discrete import CellSet, DiscreteHexagon, discretize, perimeter_energy, step_energy
from .flowsim import Trajectory, convergence_study, interpolate_affine, run
from .hexgeom import WulffHexagon, anisotropic_perimeter, incenters, side_lengths
from .lattice import LatticePoint, phi_hex, phi_hex_dual
from .limitode import gamma_limit_check, integrate_crystalline, integrate_quantized

__all__ = [
    "ALPHA_HEX",
    "CellSet",
    "DiscreteHexagon",
    "LatticePoint",
    "StepPlan",
    "Trajectory",
    "WulffHexagon",
    "anisotropic_perimeter",
    "apply_plan",
    "brute_force_step",
    "convergence_study",
    "discretize",
    "gamma_limit_check",
    "incenters",
    "integrate_crystalline",
    "integrate_quantized",
    "interpolate_affine",
    "optimal_layers",
    "perimeter_energy",
    "phi_hex",
    "phi_hex_dual",
    "reduced_energy",
    "run",
    "side_lengths",
    "step_energy",
]
