"""Level-dependent Doo-Sabin and Catmull-Clark type subdivision on quad meshes,
with numerical checks of convergence and normal continuity at extraordinary elements."""

from .analyzer import (
    AnalysisOptions,
    BLFSample,
    ConditionReport,
    JacobianSignReport,
    NormalEstimate,
    RingSample,
    basic_limit_function,
    estimate_limit_normal,
    generate_rings,
    sample_characteristic_ring,
    verify_convergence_conditions,
    verify_normal_continuity_conditions,
)
from .localmatrix import (
    BlockCirculantMatrix,
    Spectrum,
    assemble,
    decay_fit,
    fourier_block_diagonalize,
    limit_point,
    product_chain,
    spectrum,
    stationary_matrix,
)
from .mesh import (
    LocalPatch,
    QuadMesh,
    classify_elements,
    extract_local_neighborhood,
    load_obj,
    refine,
    save_obj,
    validate_manifold,
)
from .schemes import SchemeDescriptor, local_blocks, parse_scheme, regular_mask
from .symbols import LaurentSymbol, Mask2D, asymptotic_equivalence, divided_difference_symbol, operator_norm

__version__ = "0.1.0"
