"""Solitary waves of the Whitham-Boussinesq system by constrained minimisation.

Travelling waves are found as minimisers of a nonlocal energy ``E`` on the
sphere ``Q(u) = q`` in a periodic pseudospectral discretisation.  The
package also carries the long-wave (KdV) reference machinery used to
check the small-amplitude asymptotics.
"""
from .symbols import SymbolSpec, boussinesq, check_admissibility, custom, whitham
from .grid import GridFunction, PeriodicGrid
from .functionals import compute_breakdown, compute_Q, energy, grad_E
from .solver import MinimizerResult, SolverConfig, minimize_constrained, sweep
from .asymptotics import LAMBDA0, I_KDV, kdv_compare, psi_kdv, recover_physical

__version__ = "0.1.0"

__all__ = [
    "SymbolSpec", "whitham", "boussinesq", "custom", "check_admissibility",
    "PeriodicGrid", "GridFunction",
    "compute_Q", "compute_breakdown", "energy", "grad_E",
    "SolverConfig", "MinimizerResult", "minimize_constrained", "sweep",
    "LAMBDA0", "I_KDV", "psi_kdv", "kdv_compare", "recover_physical",
]
