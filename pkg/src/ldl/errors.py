"""Shared exception types."""


class LdlError(Exception):
    """Base class for all library errors."""


class ConditionError(LdlError, ValueError):
    """A structural precondition on a game, frontier, or state is violated."""


class InfeasibleMoveError(LdlError, ValueError):
    """A revision move was requested from a strategy with no agents on it."""


class AdjacencyError(LdlError, ValueError):
    """Consecutive states of a path do not differ by exactly one agent's move."""


class GuardrailExceeded(LdlError, RuntimeError):
    """A state-count or enumeration budget was exceeded.

    The message names the limit; callers can raise it via the ``guardrail``
    keyword of the search functions or the LDL_GUARDRAIL_STATES environment
    variable of the CLI.
    """


class UnsupportedRuleError(LdlError, ValueError):
    """The requested cost rule has no implementation for this operation."""
