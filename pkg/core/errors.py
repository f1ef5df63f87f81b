"""
Error types raised across the library.

Every error names the offending values (shapes, keys, offsets, step indices)
in its message.
"""


class HypernetCLError(Exception):
    """Base class for library errors."""


class DimensionError(HypernetCLError, ValueError):
    """Operand shapes do not agree."""


class LabelIndexError(HypernetCLError, IndexError):
    """Class label outside [0, K)."""


class ContractError(HypernetCLError):
    """A caller broke an operation's precondition."""


class FrozenParameterError(ContractError):
    """An update was routed to a frozen tensor."""


class RegistryError(HypernetCLError, KeyError):
    """Missing or duplicated task / head / weight registration."""

    def __str__(self):
        return str(self.args[0]) if self.args else ""


class LayoutError(HypernetCLError, ValueError):
    """A vector does not match the main-network layout."""


class OracleError(HypernetCLError):
    """Finite-difference oracle could not be evaluated."""


class FormatError(HypernetCLError, ValueError):
    """Malformed dataset or checkpoint file."""


class ConfigError(HypernetCLError, ValueError):
    """Invalid experiment configuration."""


class NonFiniteError(HypernetCLError, FloatingPointError):
    """NaN or Inf reached a loss or gradient."""


class DegenerateFisherWarning(UserWarning):
    """All Fisher entries were zero; uniform importance used instead."""
