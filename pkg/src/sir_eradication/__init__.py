"""Minimum eradication time for an SIR epidemic under a bounded vaccination rate."""

from .controls import (Concatenated, Constant, PiecewiseConstant, Switching, concat_controls,
                       evaluate_control, random_piecewise, shift_control)
from .dynamics import (DEFAULT_CONFIG, IntegratorConfig, ModelParams, State, Trajectory,
                       first_threshold_crossing, integrate, sir_invariant, vector_field)
from .eradication import (crossing_with_jacobian, eradication_time, flow_sensitivities,
                          gradient_eradication_time)
from .errors import (DegenerateCrossing, HorizonExceeded, InvalidInput, NonConvergence,
                     NumericalFailure, SIRError)
from .grids import GridSpec
from .hjb import GridValues, hjb_residual, obstacle_residual, solve_hjb_semilagrangian
from .pmp import (adjoint_backward, adjoint_from_gradients, check_necessary_conditions,
                  hamiltonian_identity)
from .value import (SearchConfig, ValueResult, classify_free_boundary, full_vaccination_time,
                    tau_star, value_by_switching)

__version__ = "0.1.0"
