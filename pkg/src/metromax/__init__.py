"""Max-plus and monotone dynamic-programming models of metro line traffic.

The package computes asymptotic train headways on a circular metro line
three independent ways (closed form, max-plus spectral analysis, and
discrete-event simulation), derives the trapezoidal fundamental diagram
and its three traffic phases, reproduces the delay amplification caused
by uncontrolled passenger-dependent dwell times, and implements the
stabilizing dwell-time control law.
"""

from importlib import resources

__version__ = "1.0.0"

from .analysis import (
    DiagramParams,
    InstabilityResult,
    Phase,
    PhasePoint,
    SweepPoint,
    classify_phase,
    control_params,
    demand_sweep,
    diagram_params,
    f_of_rho,
    g_of_rho,
    h_of_rho,
    h_of_sigma,
    instability_metric,
    optimal_train_count,
    passenger_stability,
    phase_diagram,
    phase_diagram_density,
    w_of_rho,
)
from .errors import ConfigError, ModelError
from .graphs import (
    Arc,
    PrecedenceGraph,
    build_graph,
    enumerate_elementary_cycles,
    is_acyclic,
    is_strongly_connected,
    topological_order,
)
from .line import (
    ControlParameters,
    Demand,
    LineConfig,
    LineModel,
    SimulationResult,
    TrainPlacement,
    build_controlled_system,
    build_demand_coupled_system,
    build_maxplus_system,
    closed_form_headway,
    default_initial_departures,
    maxplus_to_affine,
    place_trains,
    segmentize,
    simulate,
)
from .maxplus import EPS, UNIT, MaxPlusMatrix, MaxPlusPolyMatrix
from .monotone import (
    AugmentedSystem,
    GrowthResult,
    MaxAffineSystem,
    Piece,
    PropertyReport,
    Term,
    check_homogeneous_monotone,
    fixed_point_residual,
    iterate,
    simulate_direct,
    state_augment,
)
from .spectral import EigenResult, generalized_eigenpair, max_cycle_mean


def bundled_config(name: str):
    """Path to a configuration shipped with the package (e.g. 'paris_line14')."""
    return resources.files(__name__) / "data" / (name + ".json")
