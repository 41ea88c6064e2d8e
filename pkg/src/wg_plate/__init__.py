"""Weak Galerkin discretisation of the clamped Reissner-Mindlin plate on polygonal meshes.

The displacement carries a stabiliser while the rotation is stabiliser free.
Typical use::

    from wg_plate import ExperimentConfig, run_experiment
    res = run_experiment(ExperimentConfig(problem=1, mesh="tri", preset="P1", levels=(2, 3, 4)))
    print(res.markdown)
"""
from .assembly import (DofMap, GlobalSystem, ReducedSystem, apply_essential_bc, assemble_system,
                       build_dof_map, build_operators, local_stiffness)
from .errors import (ConditioningError, ConfigError, InvalidArgumentError, NotSPDError, SolverError,
                     UnsupportedDegreeError)
from .experiment import ExperimentConfig, run_experiment
from .mesh import Mesh, generate_mesh, read_mesh, validate, write_mesh
from .postproc import (ErrorRow, compute_errors, convergence_orders, energy_norm_theta, energy_norm_w,
                       project_exact)
from .rm_model import PlateParams, Problem, get_problem, problem1, problem2
from .solver import SolveReport, smallest_ritz_value, solve_spd
from .weakops import WeakSpaceConfig, enriched_degrees, preset_degrees

__version__ = "0.1.0"
