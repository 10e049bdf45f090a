"""
Independent verification engines for the closed-form results
"""

from .lyapunov import (
    LinearSystem,
    closed_loop_system,
    first_order_controller,
    lyapunov_covariance,
    lyapunov_variance,
    open_loop_system,
)
from .realization import StateSpaceRealization, realize
from .search import ControllerFamily, SearchResult, brute_force_controller_search, controller_purity
from .simulation import MomentSummary, SimulationResult, default_timing, simulate_closed_loop

__all__ = [
    'LinearSystem', 'closed_loop_system', 'first_order_controller', 'lyapunov_covariance',
    'lyapunov_variance', 'open_loop_system', 'StateSpaceRealization', 'realize',
    'ControllerFamily', 'SearchResult', 'brute_force_controller_search', 'controller_purity',
    'MomentSummary', 'SimulationResult', 'default_timing', 'simulate_closed_loop',
]
