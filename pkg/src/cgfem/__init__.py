"""2D Galerkin workbench: condensed GFEM with FEM, flat-top GFEM, and
SGFEM baselines on smooth and slit-domain Poisson problems."""

from .analysis import (
    ProblemData,
    convergence_slope,
    crack_problem,
    energy_error,
    pairwise_slopes,
    scaled_condition_number,
    smooth_problem,
)
from .assembly import (
    assemble_load,
    assemble_stiffness,
    assembly_rules,
    boundary_edge_rules,
    element_quadrature,
    solve_neumann,
)
from .condensation import (
    CondensedBasis,
    crack_condensed_basis,
    gram_from_values,
    smooth_condensed_basis,
)
from .enrichment import (
    CrackNodeSpace,
    MonomialSpace,
    crack_enrichment_eval,
    local_space_for_node,
    monomial_basis,
)
from .errors import (
    DegenerateDataError,
    DegenerateMeshError,
    InvalidParameterError,
    SingularPointError,
    SolverError,
    UnisolvenceError,
)
from .experiments import (
    ExperimentConfig,
    ExperimentRecord,
    run_crack_case,
    run_crack_suite,
    run_smooth_case,
    run_smooth_suite,
)
from .mesh import (
    CrackMesh,
    Mesh,
    build_crack_mesh,
    build_perturbed_mesh,
    build_uniform_mesh,
)
from .partition import FlatTopPU, HatPU, flat_top_1d
from .spaces import (
    build_cgfem_space,
    build_crack_cgfem_space,
    build_crack_gfem_space,
    build_fem_space,
    build_ftgfem_space,
    build_sgfem_space,
    constant_null_vector,
)

__version__ = "0.1.0"
