"""Two-body action-at-a-distance electrodynamics."""

from ._core import (
    Boundary,
    Branch,
    ChainDirection,
    CollisionError,
    ConeSolution,
    ConfigError,
    ContractError,
    ConvergenceError,
    DomainError,
    FieldMode,
    InsufficientHistoryError,
    IoError,
    Particle,
    SuperluminalError,
    Trajectory,
    WfvarError,
    action,
    commands,
    cone_directions,
    cone_time,
    gah_residual,
    rigidity_violation,
    run,
    sewing_chain,
    sphere_flux,
)

__all__ = [name for name in dir() if not name.startswith("_")]
