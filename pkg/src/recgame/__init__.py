"""Solver and verification harness for zero-sum recursive stochastic games.

The pieces, bottom up:

* ``model``: game descriptions, validation, JSON round trip, strategies.
* ``matgame``: exact small zero-sum matrix games.
* ``shapley``: discounted and n-stage values through the one-step operator,
  vanishing-discount limits, discount curves.
* ``everett``: one-sided value certificates, their search, and stationary
  strategy extraction.
* ``respond``: best responses against a frozen stationary strategy.
* ``sim``: Monte Carlo play and the long-run guarantee harness.
* ``zoo``: canonical games, random generators, parametric families.
* ``cli``: the ``recgame`` command.
"""

from __future__ import annotations

__version__ = "0.1.0"

from .errors import (
    CertificateNotValid,
    DimensionMismatch,
    GameFormatError,
    IterationLimit,
    NegativeProbability,
    NoActiveState,
    NonFiniteEntry,
    NonStochasticRow,
    RecgameError,
    SolverError,
)
from .matgame import MatrixGameSolution, solve_matrix_game
from .model import (
    GameSpec,
    StationaryStrategy,
    load_game,
    save_game,
    to_dict,
    validate,
)
from .shapley import (
    DiscountCurve,
    LimitEstimate,
    apply_operator,
    discounted_value,
    n_stage_values,
    recursive_identity_residual,
    vanishing_discount_limit,
)
from .everett import (
    CertificateReport,
    SearchFailure,
    extract_stationary_strategy,
    find_certificate,
    mn_condition_check,
    xi_margin,
)
from .respond import BestResponseResult, best_response_discounted
from .sim import (
    GuaranteeReport,
    SimulationReport,
    Trajectory,
    guarantee_report,
    sample_trajectory,
    simulate,
)

__all__ = [
    "BestResponseResult",
    "CertificateNotValid",
    "CertificateReport",
    "DimensionMismatch",
    "DiscountCurve",
    "GameFormatError",
    "GameSpec",
    "GuaranteeReport",
    "IterationLimit",
    "LimitEstimate",
    "MatrixGameSolution",
    "NegativeProbability",
    "NoActiveState",
    "NonFiniteEntry",
    "NonStochasticRow",
    "RecgameError",
    "SearchFailure",
    "SimulationReport",
    "SolverError",
    "StationaryStrategy",
    "Trajectory",
    "apply_operator",
    "best_response_discounted",
    "discounted_value",
    "extract_stationary_strategy",
    "find_certificate",
    "guarantee_report",
    "load_game",
    "mn_condition_check",
    "n_stage_values",
    "recursive_identity_residual",
    "sample_trajectory",
    "save_game",
    "simulate",
    "solve_matrix_game",
    "to_dict",
    "validate",
    "vanishing_discount_limit",
    "xi_margin",
]
