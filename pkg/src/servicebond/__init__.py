"""Service bonds: audit distances, service cycles, modulated bonds and
ecosystem simulation.

The most used names are re-exported here; submodules hold the rest.
"""
from .kernels import BACKEND
from .errors import (
    AmbiguousNaive,
    IncompatibleTraces,
    InfeasibleQuota,
    InsufficientData,
    InvalidInput,
    InvalidTransition,
    NegotiationRejected,
    NonConvergence,
    OutOfHorizon,
    ParseError,
    RetryCapExceeded,
    ServiceBondError,
    UnknownDevice,
)
from .trace_model import (
    Metric,
    Signal,
    SloTuple,
    Trace,
    converged_period,
    make_reference_trace,
    sample_signal,
)
from .distances import (
    DistanceTuple,
    PBd,
    PId,
    RBd,
    RXd,
    RXdSpatial,
    distance,
    find_illusion_period,
    prime_time_mean,
    rbd_norm,
    step_distance,
)
from .service_cycle import Agreement, CycleState, Event, Phase, advance, audit, negotiate
from .bond_fabric import (
    Bond,
    BondSchedule,
    Molecule,
    ReviewPolicy,
    apply_review,
    bond_grade,
    communities,
    is_bonded_at,
    modulate,
    review_bond,
)
from .ecosystem_sim import InteractionForm, Scenario, SimReport, run
from .smarthouse import allocate_bandwidth, gate_flow, reciprocal_tap, run_smarthouse

__version__ = "0.1.0"
