"""Boundary-element toolkit for periodic bubble screens above a sound-soft plane."""

from .boundary import BubbleGeometry, DiscreteBoundary, discretize
from .errors import (
    BubbleScreenError,
    ConfigurationError,
    ConvergenceError,
    DiffractionError,
    DomainError,
    PoleError,
    RegimeError,
    WoodAnomalyError,
)
from .lattice_green import (
    EwaldParams,
    LatticeConfig,
    Point2,
    Wavenumbers,
    g1_sharp,
    green_dirichlet,
    green_direct,
    green_ewald,
    green_expansion_terms,
    green_spectral,
)
from .layer_ops import (
    BlockOperator,
    ComplexOperator,
    LayerPotentialAssembler,
    assemble_block,
    assemble_nk_adjoint,
    assemble_single_layer,
    block_rhs,
    eval_field,
)
from .resonance import (
    DampingModel,
    MediaConfig,
    ResonanceReport,
    alpha_infinity,
    calibrate_standoff_ratio,
    compute_capacity,
    compute_m1_psi1,
    compute_psi0,
    compute_report,
    find_characteristic_value,
    minnaert_frequency,
    reflection,
    reflection_epsilon,
    scattered_field,
    scattering_gs,
    solve_reflection,
)

__version__ = "0.1.0"
