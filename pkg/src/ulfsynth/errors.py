"""Exception types shared across the toolkit."""

from __future__ import annotations


class UlfsynthError(Exception):
    """Base class for all toolkit errors."""


class FormatError(UlfsynthError):
    """A file could not be parsed; the message names the offending field or row."""


class UnsupportedTypeError(FormatError):
    """The file stores voxels in a datatype this toolkit does not handle."""


class DimensionalityError(FormatError):
    """The file is not 3-D (trailing singleton dimensions are tolerated)."""


class ContractError(UlfsynthError, ValueError):
    """An operation was called with arguments that violate its contract."""


class EmptyStructureError(UlfsynthError):
    """A metric required a nonempty structure mask.

    `side` names which input was empty ("pred", "gt", or "both"); `label` is
    the structure id when known.
    """

    def __init__(self, side: str, label: int | None = None):
        self.side = side
        self.label = label
        suffix = f" for label {label}" if label is not None else ""
        super().__init__(f"{side} mask is empty{suffix}")


class ConfigError(UlfsynthError):
    """Invalid or incomplete configuration."""
