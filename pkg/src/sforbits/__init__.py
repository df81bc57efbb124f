"""Periodic orbits near a bifurcating normally elliptic slow manifold.

Library and CLI for censusing periodic orbits of slow-fast pitchfork
Hamiltonians, evaluating the asymptotic return-map factorization
(outer drift, Painleve-II-type crossing, inner drift), predicting orbits
and their stability from the reduced fixed-point equations, and verifying
the crossing asymptotics by direct stiff integration.
"""

__version__ = "0.1.0"

from .model import (ExtendedState, ModelSpec, ScaleFrame, eval_hamiltonian,
                    kappa, singular_distance, symmetry_apply, toy_model,
                    validate_assumptions, vartheta, vector_field)

__all__ = [
    "ExtendedState", "ModelSpec", "ScaleFrame", "eval_hamiltonian", "kappa",
    "singular_distance", "symmetry_apply", "toy_model", "validate_assumptions",
    "vartheta", "vector_field", "__version__",
]
