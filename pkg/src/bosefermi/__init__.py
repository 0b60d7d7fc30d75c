"""Exact construction and verification of Bose/Fermi polynomial and
character identities for the minimal models M(p, p').

The package is organized bottom-up:

    qlaurent   exact sparse Laurent polynomials in q^(1/4)
    qbinomial  Gaussian and extended q-binomials
    model      Takahashi-Suzuki combinatorics for (p, p')
    bosonic    alternating-sum polynomials, recursions, characters
    fermionic  lattice sums f and f-tilde, duals, characters
    evolution  the length-raising engine and its flow theorems
    identities closed forms, polynomial identities, dual/reversed
               forms, the q=1 limit and Bailey pairs
    cli        command line front end
"""

from .qlaurent import ONE, ZERO, QExponent, QPoly, q_pow
from .qbinomial import ext_binom, gauss
from .model import (
    CaseInfo,
    ModelData,
    ModelError,
    TakahashiDecomposition,
    build_model,
    c_exponent,
    classify_case,
    conformal_data,
    decompose_b,
    decompose_truncated,
    phi_difference,
    r_of_b,
    takahashi_length,
)

__version__ = "0.1.0"

__all__ = [
    "ONE", "ZERO", "QExponent", "QPoly", "q_pow",
    "ext_binom", "gauss",
    "CaseInfo", "ModelData", "ModelError", "TakahashiDecomposition",
    "build_model", "c_exponent", "classify_case", "conformal_data",
    "decompose_b", "decompose_truncated", "phi_difference", "r_of_b",
    "takahashi_length",
    "__version__",
]
