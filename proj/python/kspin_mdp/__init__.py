"""K-spin policy Hamiltonians for finite discounted MDPs."""

from ._core import (
    Hamiltonian,
    KspinError,
    LimitError,
    Mdp,
    ParseError,
    Polynomial,
    Qubo,
    ValidationError,
    absorbing_states,
    build_hallway,
    compile,
    exhaustive_ground_state,
    interior_states,
    load_mdp,
    minimal_truncation_order,
    policy_evaluation,
    q_learning,
    quadratize,
    simulated_anneal,
    sufficient_reduction_penalty,
    truncated_q,
    tts,
    value_iteration,
)

__all__ = [name for name in dir() if not name.startswith("_")]
