"""Coherent-state variational mean-field schemes for the Bose-Hubbard model.

Gutzwiller, Glauber (DNLS) and SU(M) coherent-state dynamics, checked against
exact fixed-number Fock-space evolution.
"""
from .cs_algebra import GlauberState, SuMState
from .fock import FockBasis, SectorVector, enumerate_sector
from .gutzwiller import GutzwillerState
from .integrator import IntegratorConfig, Trajectory, integrate
from .model import BHParams, HoppingMatrix, build_ring_hopping, ring_params

__all__ = [
    "BHParams",
    "FockBasis",
    "GlauberState",
    "GutzwillerState",
    "HoppingMatrix",
    "IntegratorConfig",
    "SectorVector",
    "SuMState",
    "Trajectory",
    "build_ring_hopping",
    "enumerate_sector",
    "integrate",
    "ring_params",
]

__version__ = "0.1.0"
