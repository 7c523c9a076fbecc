"""Exception hierarchy shared by every t2net module.

Each class also derives from the builtin it specializes, so callers that
catch ``ValueError`` / ``RuntimeError`` keep working.
"""

from __future__ import annotations


class T2NetError(Exception):
    """Root of all t2net errors."""

    exit_code: int = 1


class DimensionError(T2NetError, ValueError):
    """Shapes or sizes are incompatible with the requested operation."""

    exit_code = 2


class ParameterError(T2NetError, ValueError):
    """A parameter is out of range or the request is infeasible."""

    exit_code = 2


class IndexBoundsError(T2NetError, IndexError):
    """A gather index falls outside the indexed axis."""

    exit_code = 2


class ContractError(T2NetError, RuntimeError):
    """An API precondition was violated by the caller."""


class ArtifactFormatError(T2NetError, ValueError):
    """A checkpoint, sample or sidecar file is malformed."""

    exit_code = 3


class NumericalError(T2NetError, ArithmeticError):
    """A non-finite value appeared where finite values are required."""

    exit_code = 4
