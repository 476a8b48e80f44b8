"""Best proximity points of ordered multivalued cyclic maps on compact subsets of R^d."""
from importlib.resources import files

from .engine import (
    ProximityReport,
    SelectionStrategy,
    Trajectory,
    convergence_report,
    quasi_proximity_check,
    run_trajectory,
    select_successor,
    uniqueness_probe,
)
from .geometry import (
    Region,
    diameter,
    hausdorff,
    metric,
    nearest_point,
    point_to_set_distance,
    sample,
    set_distance,
    sup_deviation,
)
from .kernels import BACKEND
from .order import OrderRelation, OrderThresholds, induced_by_iteration, leq, verify_chain
from .scenario import Scenario, emit, load_scenario, parse_scenario, run_scenario
from .system import (
    AffinePiece,
    CyclicSystem,
    MultiMap,
    apply,
    check_contraction,
    composite_apply,
    subset_index,
)

__version__ = "0.1.0"


def shipped_scenario(name: str) -> str:
    """Text of a bundled scenario, e.g. ``shipped_scenario("two_interval")``."""
    return files(__package__).joinpath("scenarios", f"{name}.json").read_text()
