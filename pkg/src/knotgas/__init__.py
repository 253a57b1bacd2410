"""Grand-canonical thermodynamics of Fermi and Bose gases on torus knots and rings."""
from .errors import (
    BracketError,
    ConfigError,
    ConvergenceError,
    DegenerateTopologyError,
    DivergenceError,
    DomainError,
    InvalidGeometryError,
    KnotGasError,
    NoSolutionError,
    TruncationError,
)
from .spectra import (
    RingGeometry,
    Statistics,
    TorusGeometry,
    make_torus_geometry,
    ring_level,
    thermal_wavelength,
    topological_factor,
    torus_level,
)
from .statfns import fugacity, h, h_series_oracle, log_occupancy_term
from .numerics import SolverSettings, central_derivative, fixed_point, solve_root
from .ensemble import ThermoPoint, ThermoQuantities, TruncationPolicy, evaluate, sweep
from .meanfield import InteractionModel, MeanFieldState, evaluate_interacting, fermi_level_solve

__version__ = "0.1.0"
