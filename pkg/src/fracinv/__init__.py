"""Reaction-coefficient identification for time-fractional diffusion from boundary flux data."""

from .caputo import CaputoScheme, build_scheme, history_combination
from .forward import (
    Excitation,
    ForwardOperator,
    ForwardSolution,
    assemble_boundary_load,
    assemble_reaction,
    assemble_static,
    dirichlet_to_neumann,
    extract_flux,
    sine_excitation,
    solve_forward,
)
from .invert import InversionRun, LmConfig, fd_jacobian, lm_step, relative_error, residual, run
from .mesh import Mesh, boundary_restriction, build_mesh
from .param import CoefficientParam, KleBasis, build_kle, project_truth, realize
from .regpen import Penalty, penalty_matrices, penalty_value
from .synth import ExperimentSpec, build_problem, make_data, reference_specs

__version__ = "0.1.0"
