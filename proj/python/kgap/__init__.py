"""Python bindings for the kgap C++ core."""

from ._kgap import (
    CollisionOperator,
    VelocityGrid,
    coercivity_constant,
    collision_operator,
    exit_time,
    plain_gap,
    rightmost_eigenvalues,
    run,
    subcommands,
    weight_W,
)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_FALSIFIED = 0, 2, 3, 4

__all__ = [
    "CollisionOperator",
    "VelocityGrid",
    "coercivity_constant",
    "collision_operator",
    "exit_time",
    "plain_gap",
    "rightmost_eigenvalues",
    "run",
    "subcommands",
    "weight_W",
]
