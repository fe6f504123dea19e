"""Symmetric tensor CP decomposition via the subspace power method."""

from .ascent import (
    AscentConfig,
    AscentTrace,
    run_pm_ascent,
    run_spm_ascent,
    solve_component,
    spm_step,
)
from .decompose import (
    DecompositionResult,
    MatchReport,
    decompose,
    deflate_subspace,
    match_components,
    weight_estimate,
)
from .errors import (
    BoundUndefinedError,
    DegenerateStepError,
    EmptySubspaceError,
    NoComponentFoundError,
    RankDeficiencyError,
    WeightUndefinedError,
)
from .fileio import (
    load_ensemble,
    load_subspace,
    load_tensor,
    save_ensemble,
    save_subspace,
    save_tensor,
)
from .landscape import (
    CriticalityReport,
    FrameConstantEntry,
    Grammian,
    RipCheckResult,
    RipPartition,
    ThresholdSet,
    certify_point,
    component_subspace,
    estimate_rho,
    expansion_coefficients,
    grammian,
    objective_via_grammian,
    pm_objective,
    rip_check,
    rip_partition,
    spurious_construction,
    thresholds,
)
from .seeding import derive_rng, make_rng
from .subspace import (
    SubspaceErrorBound,
    TensorSubspace,
    extract_subspace,
    lemma1_bound,
    max_tangent_hessian_eigenvalue,
    objective,
    project_coeffs,
    riemannian_gradient,
    riemannian_hessian_quadratic,
    subspace_distance,
    tangent_basis,
)
from .tensors import (
    ComponentEnsemble,
    DenseTensor,
    SymTensor,
    add_gaussian_noise,
    contract,
    cp_synthesize,
    flatten,
    frobenius_inner,
    frobenius_norm,
    is_symmetric,
    khatri_rao_power,
    sym_outer_power,
    symmetrize,
    tensorize,
    vec_power,
)

__version__ = "0.1.0"
