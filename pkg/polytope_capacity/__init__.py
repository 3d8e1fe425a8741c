"""Symplectic capacities of convex polytopes in R^{2n}.

Computes the Ekeland-Hofer-Zehnder capacity, its Ψ-twisted variant and the
coisotropic capacity c_LR through their combinatorial formulas over facet
permutations, and rebuilds the minimizing boundary paths.
"""

from __future__ import annotations

from .capacity import CapacityResult, cut_experiment, cut_sweep, ehz, lr, psi_ehz
from .characteristic import action, reconstruct, verify
from .config import DEFAULT_CONFIG, SolverConfig
from .polytope import Polytope, from_halfspaces, from_vertices, load_polytope

__all__ = [
    "DEFAULT_CONFIG",
    "CapacityResult",
    "Polytope",
    "SolverConfig",
    "action",
    "cut_experiment",
    "cut_sweep",
    "ehz",
    "from_halfspaces",
    "from_vertices",
    "load_polytope",
    "lr",
    "psi_ehz",
    "reconstruct",
    "verify",
]
