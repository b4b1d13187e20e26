"""Shrinking-horizon deferrable load control: simulation, closed-form
bounds, and Monte Carlo validation."""

__version__ = "0.1.0"

from .analytics import (AnalyticReport, ErrorBounds, bernstein_tail,
                        build_report, chebyshev_tail, expected_variance,
                        interaction_term, lambda1, lambda1_trace,
                        load_variance, matrix_variance, percentile_bound,
                        v_decomposition, variance_upper_bound,
                        worst_case_variance)
from .errors import (ConfigError, ConvergenceError, InfeasibleError,
                     OdlcError, SolverError, TraceError)
from .models import (ArrivalModel, BaseloadModel, CausalFilter, HorizonConfig,
                     ScenarioDraw, adversarial_scenario, cumulative_filter,
                     expected_future_arrivals, predict_baseload,
                     realized_baseload, sample_scenario)
from .montecarlo import (CdfTable, EnsembleResult, RunConfig, empirical_cdf,
                         empirical_percentile, run_ensemble)
from .qp import (DeferrableLoad, PseudoLoadBounds, Schedule, SolverOptions,
                 fleet_from_scenario, project_box_sum, run_mpc,
                 solve_odlc_offline, solve_odlc_t)
from .valley import (AggregateTrajectory, RemainingEnergyState,
                     check_valley_filling, run_valley_mpc, valley_level)
