"""Numerical laboratory for conductivity cloaking and illusion on the disk.

Modules: mesh (interface-fitted triangulations), conductivity (SPD tensor
fields), diffeo (radial maps and push-forwards), fem (P1 solver), dtn
(discrete Dirichlet-to-Neumann operators and disk oracles), experiments
(named verification scenarios), cli (command-line driver).
"""

from .conductivity import (
    TensorField,
    check_ellipticity,
    check_jump_condition,
    field_from_config,
    homogeneous_field,
    make_case,
)
from .diffeo import (
    RadialDiffeo,
    apply,
    compose,
    diffeo_from_config,
    identity_diffeo,
    inverse_apply,
    invert,
    jacobian,
    jacobian_fd,
    make_cloak_map,
    make_interior_diffeo,
    pushforward,
    validate_diffeo,
)
from .dtn import (
    DtnMatrix,
    dtn_distance,
    dtn_eigenvalue_estimate,
    oracle_homogeneous,
    oracle_layered,
    schur_dtn,
)
from .experiments import ExperimentConfig, ExperimentReport, run_scenario
from .fem import (
    Solution,
    StiffnessSystem,
    assemble,
    dirichlet_energy,
    sample_boundary_datum,
    solve_dirichlet,
)
from .mesh import Mesh, build_disk_mesh, load_mesh, mesh_quality, refine, save_mesh
from .render import render_field_svg

__version__ = "0.1.0"
