"""Numerical laboratory for concavifications of finite-dimensional Banach
lattices, their Fremlin projective tensor products and diagonal quotients."""

from .concavification import (
    ConcaveSpace,
    Decomposition,
    NormResult,
    closed_form_applies,
    concavification_norm,
    nondegeneracy_bound,
    odot,
    oplus,
    seminorm_kernel_check,
)
from .lattice import (
    DimensionError,
    LatticeSpace,
    LatticeVector,
    NormFamily,
    StructuralError,
    Sup,
    WeightedLq,
    signed_power,
    signed_product_power,
)
from .optim import (
    DecompositionProblem,
    OracleSizeError,
    SolverConfig,
    SolverReport,
    brute_force_oracle,
    minimize_decomposition,
)
from .orthomaps import (
    LinearMap,
    OrthoMap,
    evaluate,
    factorize,
    hat_phi,
    mu,
    random_orthomap,
    verify_orthomaps,
)
from .quotient import (
    DiagonalIdeal,
    QuotientElement,
    diagonal_embed_T,
    diagonal_extract_M,
    ideal_member,
    quotient_norm,
)
from .tensor import (
    MultilinearMap,
    PositiveDecomposition,
    Tensor,
    TensorSpace,
    apply_universal,
    elementary,
    fremlin_norm,
)

__version__ = "0.1.0"

__all__ = [
    "ConcaveSpace", "Decomposition", "NormResult", "closed_form_applies", "concavification_norm",
    "nondegeneracy_bound", "odot", "oplus", "seminorm_kernel_check",
    "DimensionError", "LatticeSpace", "LatticeVector", "NormFamily", "StructuralError", "Sup",
    "WeightedLq", "signed_power", "signed_product_power",
    "DecompositionProblem", "OracleSizeError", "SolverConfig", "SolverReport", "brute_force_oracle",
    "minimize_decomposition",
    "LinearMap", "OrthoMap", "evaluate", "factorize", "hat_phi", "mu", "random_orthomap",
    "verify_orthomaps",
    "DiagonalIdeal", "QuotientElement", "diagonal_embed_T", "diagonal_extract_M", "ideal_member",
    "quotient_norm",
    "MultilinearMap", "PositiveDecomposition", "Tensor", "TensorSpace", "apply_universal",
    "elementary", "fremlin_norm",
]
