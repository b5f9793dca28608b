"""Exact-arithmetic-quality solver for small zero-sum matrix games.

The row player maximizes, the column player minimizes. Solutions come from
the compiled simplex in ``_kernels``; this wrapper validates input, cleans
up rounding in the mixtures, and enforces the advertised tolerances before
returning. A returned solution always satisfies

    min_j x'A e_j >= value - OPT_TOL   and   max_i e_i'A y <= value + OPT_TOL

and both mixtures are entrywise >= -FEAS_TOL before cleanup.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import DimensionMismatch, NonFiniteEntry, SolverError

FEAS_TOL = 1e-10
OPT_TOL = 1e-8

_STATUS_MSG = {
    1: "simplex hit its pivot cap",
    2: "simplex reported an unbounded LP",
    3: "simplex returned a degenerate objective",
}


@dataclass(frozen=True)
class MatrixGameSolution:
    """Value and optimal mixtures of a matrix game.

    Attributes:
        value: Game value (row player guarantees it from above, column
            player from below, within OPT_TOL).
        x: Row player's optimal mixture, length m.
        y: Column player's optimal mixture, length n.
    """

    value: float
    x: np.ndarray
    y: np.ndarray


def solve_matrix_game(matrix) -> MatrixGameSolution:
    """Solve the zero-sum game with payoff matrix ``matrix``.

    Args:
        matrix: 2-D array-like, shape (m, n), m >= 1 and n >= 1.

    Raises:
        DimensionMismatch: Not a nonempty 2-D matrix.
        NonFiniteEntry: NaN or infinity in the matrix.
        SolverError: The simplex failed or the result misses tolerance.
    """
    A = np.asarray(matrix, dtype=float)
    if A.ndim != 2 or A.shape[0] < 1 or A.shape[1] < 1:
        raise DimensionMismatch(f"expected a nonempty 2-D matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise NonFiniteEntry("matrix contains NaN or infinity")

    value, x, y, status = _kernels.matrix_game(np.ascontiguousarray(A))
    if status != 0:
        raise SolverError(_STATUS_MSG.get(status, f"status {status}"))
    scale = max(1.0, float(np.max(np.abs(A))))
    if min(x.min(), y.min()) < -FEAS_TOL:
        raise SolverError("solver produced a negative probability beyond tolerance")
    x = np.clip(x, 0.0, None)
    y = np.clip(y, 0.0, None)
    x /= x.sum()
    y /= y.sum()

    row_guarantee = float(np.min(x @ A))
    col_guarantee = float(np.max(A @ y))
    if row_guarantee < value - OPT_TOL * scale or col_guarantee > value + OPT_TOL * scale:
        raise SolverError(
            f"optimality tolerance missed: value={value!r},"
            f" row guarantee={row_guarantee!r}, column guarantee={col_guarantee!r}")
    x.setflags(write=False)
    y.setflags(write=False)
    return MatrixGameSolution(value=float(value), x=x, y=y)
