"""Sensor subset selection for generalized eigenvalue filters."""

from ._core import (
    FormatError,
    LinalgError,
    eval_subset,
    grq_db,
    methods,
    read_covariance,
    run_benchmark,
    select,
    simulate,
    solve_gevd,
    write_covariance,
)

__all__ = [
    "FormatError",
    "LinalgError",
    "eval_subset",
    "grq_db",
    "methods",
    "read_covariance",
    "run_benchmark",
    "select",
    "simulate",
    "solve_gevd",
    "write_covariance",
]
