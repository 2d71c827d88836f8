"""Planar two-band model with an imaginary spin-orbit coupling.

Closed-form level structure, antilinear-symmetry checks and truncated
numeric spectra for a first-order two-component Hamiltonian whose squared
levels are linear in one derived coupling constant.
"""

from .exact import ComplexRational, exact_sqrt
from .params import (
    Branch,
    DegenerateCoefficientsError,
    DerivedCoeffs,
    PhaseVerdict,
    PhysParams,
    Valley,
    Vary,
    classify_phase,
    critical_point,
    default_critical_tol,
    derive_coeffs,
    level_energy,
    mass_gap,
    normalizability,
)
from .opalg import (
    P1T,
    P2T,
    TIME_REVERSAL,
    AntilinearOp,
    JCReport,
    OperatorExpr,
    SpinorFunction,
    WeightedPolynomial,
    analytic_state,
    block_operators,
    build_hamiltonian,
    eigen_residual,
    jc_verify,
    ladder_raise,
    lll_annihilation_residual,
    lll_state,
    operator_residual_on_probes,
    pt_commutator_residual,
    pt_eigenfactor,
    pt_transform,
    standard_probes,
    time_reversal_conjugate,
)
from .spectral import (
    EigenResult,
    EigensolveError,
    NoTransitionBracketedError,
    SpectrumReport,
    TruncatedRep,
    build_truncated,
    classify_spectrum,
    dump_matrix,
    eigensolve,
    find_exceptional_point,
    parse_matrix,
    phase_verdict_numeric,
    scramble,
)

__version__ = "0.1.0"

__all__ = [
    "AntilinearOp",
    "Branch",
    "ComplexRational",
    "DegenerateCoefficientsError",
    "DerivedCoeffs",
    "EigenResult",
    "EigensolveError",
    "JCReport",
    "NoTransitionBracketedError",
    "OperatorExpr",
    "P1T",
    "P2T",
    "PhaseVerdict",
    "PhysParams",
    "SpectrumReport",
    "SpinorFunction",
    "TIME_REVERSAL",
    "TruncatedRep",
    "Valley",
    "Vary",
    "WeightedPolynomial",
    "analytic_state",
    "block_operators",
    "build_hamiltonian",
    "build_truncated",
    "classify_phase",
    "classify_spectrum",
    "critical_point",
    "default_critical_tol",
    "derive_coeffs",
    "dump_matrix",
    "eigen_residual",
    "eigensolve",
    "exact_sqrt",
    "find_exceptional_point",
    "jc_verify",
    "ladder_raise",
    "level_energy",
    "lll_annihilation_residual",
    "lll_state",
    "mass_gap",
    "normalizability",
    "operator_residual_on_probes",
    "parse_matrix",
    "phase_verdict_numeric",
    "pt_commutator_residual",
    "pt_eigenfactor",
    "pt_transform",
    "scramble",
    "standard_probes",
    "time_reversal_conjugate",
    "__version__",
]
