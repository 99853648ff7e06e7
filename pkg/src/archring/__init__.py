"""Clock-driven leader election on a unidirectional ring: simulator, bounds and experiments."""

from .codec import code_length, dyadic_decode, dyadic_encode, message_bits
from .protocol import Power2, Relative, ScaledPower, Table, eval_delay
from .simulator import (
    ConfigError,
    InvariantFault,
    Outcome,
    RingConfig,
    Simulation,
    derive_params,
    run_election,
    validate_config,
)
from .bounds import bound_report
from .scenarios import (
    Heterogeneous,
    Lockstep,
    adversarial_config,
    average_case_experiment,
    baseline_filter_run,
    compare_protocols,
    random_config,
    ring_size_from_time,
    ring_size_of,
)

__version__ = "0.1.0"

__all__ = [
    "code_length", "dyadic_decode", "dyadic_encode", "message_bits",
    "Power2", "Relative", "ScaledPower", "Table", "eval_delay",
    "ConfigError", "InvariantFault", "Outcome", "RingConfig", "Simulation",
    "derive_params", "run_election", "validate_config",
    "bound_report",
    "Heterogeneous", "Lockstep", "adversarial_config", "average_case_experiment",
    "baseline_filter_run", "compare_protocols", "random_config",
    "ring_size_from_time", "ring_size_of",
]
