"""Mixed P1 finite element solver for the stochastic Cahn-Hilliard equation
with multiplicative scalar noise, plus Monte Carlo experiment drivers."""

__version__ = "0.1.0"

from .errors import (AssemblyError, ConfigError, LinearSolveError,
                     MeanZeroError, MeshError, NewtonError, SchfemError)
from .mesh import Mesh, build_rect_mesh, check_mesh, mesh_size
from .fem import (AssembledOperators, NodalField, apply_double_well, assemble,
                  check_nonlinear_form, discrete_laplacian, h_minus1_inner,
                  h_minus1_norm, interpolate, inv_discrete_laplacian,
                  l2_project, norms, verify_operators)
from .noise import NoiseStream, draw_increment, increment_array
from .stepper import PathResult, SchemeParams, StepResult, evolve_path, step
from .initialdata import make_initial
from .levelset import LevelSet, enclosed_area, zero_level_set
from .experiments import (ConvergenceConfig, ErrorTable, HolderConfig,
                          HolderReport, RunStats, StabilityConfig,
                          holder_check, run_convergence, run_stability)

__all__ = [name for name in dir() if not name.startswith("_")]
