from framework.solvers.closed import ClosedPropagator, negativity_onset, propagate_closed
from framework.solvers.master import (
    OpenPropagator,
    positivity_scan,
    propagate_open,
    propagate_qubit_marginal,
)

__all__ = [
    "ClosedPropagator",
    "OpenPropagator",
    "negativity_onset",
    "positivity_scan",
    "propagate_closed",
    "propagate_open",
    "propagate_qubit_marginal",
]
