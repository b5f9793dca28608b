"""Exception hierarchy for recgame.

Every error raised on purpose by this package derives from RecgameError so
callers (and the CLI) can catch one type. Validation errors carry enough
context in the message to locate the offending entry.
"""

from __future__ import annotations


class RecgameError(Exception):
    """Base class for all recgame errors."""


class GameFormatError(RecgameError):
    """Malformed game description: bad keys, types, or names."""


class DimensionMismatch(GameFormatError):
    """An array in the description has the wrong shape."""


class NonStochasticRow(GameFormatError):
    """A transition row does not sum to 1 within tolerance."""


class NegativeProbability(GameFormatError):
    """A transition probability is negative."""


class NoActiveState(GameFormatError):
    """The game has no active states and was not flagged trivial."""


class NonFiniteEntry(RecgameError):
    """A numeric input contains NaN or infinity."""


class SolverError(RecgameError):
    """A numeric routine failed to reach its advertised tolerance."""


class IterationLimit(SolverError):
    """An iterative routine hit its iteration cap before converging."""


class CertificateNotValid(RecgameError):
    """A vector presented as a certificate fails verification."""
