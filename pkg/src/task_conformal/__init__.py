"""Conformal calibration of task outputs computed from posterior recoveries."""

__all__ = [
    "acceptance",
    "commands",
    "config_loader",
    "conformal",
    "errors",
    "models",
    "multiround",
    "reporting",
    "seeding",
    "testbed",
    "validation",
]
