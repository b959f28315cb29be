"""Online interval selection with revocable acceptances.

Policies decide one arrival at a time while a harness enforces feasibility;
adversarial generators, exact offline oracles, a charge-accounting audit,
and seeded Monte Carlo runners make the worst-case and random-order behavior
of every built-in policy reproducible down to the byte.
"""

from ._engine import BACKEND, COMPILED
from .algorithms import (
    Action,
    ArbPolicy,
    Policy,
    PolicyState,
    ThresholdPolicy,
    ThresholdPolicyTables,
    make_policy,
)
from .core import (
    ArrivalSequence,
    InstanceStats,
    Interval,
    call_control_point_bound,
    conflicts,
    contains_properly,
    instance_stats,
    normalize_to_grid,
    overlap_amount,
    read_jsonl,
    validate_solution,
    write_jsonl,
)
from .harness import (
    RunResult,
    TrialStats,
    run_adversarial,
    run_arb_expectation,
    run_distributional,
    run_random_order,
)
from .oracle import (
    ChargeLedger,
    OptCertificate,
    opt_bruteforce,
    opt_unweighted,
    opt_weighted,
    verify_charging,
)

__version__ = "0.1.0"

__all__ = [
    "Action",
    "ArbPolicy",
    "ArrivalSequence",
    "BACKEND",
    "COMPILED",
    "ChargeLedger",
    "InstanceStats",
    "Interval",
    "OptCertificate",
    "Policy",
    "PolicyState",
    "RunResult",
    "ThresholdPolicy",
    "ThresholdPolicyTables",
    "TrialStats",
    "call_control_point_bound",
    "conflicts",
    "contains_properly",
    "instance_stats",
    "make_policy",
    "normalize_to_grid",
    "opt_bruteforce",
    "opt_unweighted",
    "opt_weighted",
    "overlap_amount",
    "read_jsonl",
    "run_adversarial",
    "run_arb_expectation",
    "run_distributional",
    "run_random_order",
    "validate_solution",
    "verify_charging",
    "write_jsonl",
]
