"""Exact filtered Floer-type algebra over truncated Novikov rings."""
from .core import (
    FieldElement,
    LaurentNovikovScalar,
    ModulusMismatch,
    NotInvertible,
    NovikovError,
    NovikovScalar,
    PrecisionExhausted,
    ns_add,
    ns_invert,
    ns_mul,
)
from .matrix import Matrix
from .complex import (
    AtLeastE,
    Bar,
    Barcode,
    ChainVector,
    FilteredComplex,
    Generator,
    barcode,
    boundary_depth,
    normalize,
    persistence_map,
    random_complex,
    sigma,
    tau_drop,
    validate,
    window_homology,
)
from .perturbation import SDRData, Perturbation, apply_bpl, strictify, validate_sdr
from .equivariant import (
    assemble_equivariant,
    build_morse_complex,
    build_tate,
    quasi_frobenius_check,
    tate_model_equivariant,
    tensor_power,
    verify_depth_inequality,
)
from .xk import XkModule, ObstructionNonexact, promote, promote_step, validate_xk

__version__ = "0.1.0"
