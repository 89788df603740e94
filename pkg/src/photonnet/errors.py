"""Exception hierarchy.

Validation problems (bad input, undeclared modes, malformed files) and
numerical-contract violations (non-unitary matrices, normalization failures,
size caps) are kept apart because the CLI maps them to different exit codes.
"""


class PhotonNetError(Exception):
    """Base class for all errors raised by photonnet."""


class ValidationError(PhotonNetError, ValueError):
    """Input does not satisfy a structural precondition."""


class ContractError(PhotonNetError, ArithmeticError):
    """A numerical contract was violated (norm, unitarity, size cap)."""


class CapExceeded(ContractError):
    """A dense representation or enumeration would exceed its configured cap."""
