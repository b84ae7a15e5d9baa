"""Large-deviation analysis of buffer overflow for scaled Markov jump processes."""
from .errors import *  # noqa: F401,F403
from .model import (FrozenModel, JumpModel, RateFn, Transition, ZoomedModel,
                    bundled_models, drift, load_model, model_from_dict,
                    model_to_dict, rate, validate)
from .ratefn import local_cost, local_cost_batch
from .pathspace import (PiecewiseLinearPath, buffer_value, buffer_value_ode,
                        concavity_gap, path_cost, sup_distance)
from .varsolver import (VariationalSolution, path_diagnostics, rescale_small_buffer,
                        scale_solution, small_buffer_study, solve_fixed_T,
                        solve_problem_A, uniqueness_certificate)
from .equilibrium import (attracting_point, drift_report, entropy,
                          fluid_trajectory, upcrossing_point)
from .simulate import (conditional_paths, mean_path, overflow_probability,
                       ssa_simulate)
from .crosscheck import SourceModel, bd_decay_rate, log_mgf, source_from_closed_model

__version__ = "0.1.0"
