"""Exception hierarchy shared by all modules."""


class EulerSparseError(Exception):
    """Base class for every error raised by this package."""


class InvalidGraph(EulerSparseError, ValueError):
    """Edge list violates a structural requirement (self-loop, bad id, weight)."""


class InvalidParams(EulerSparseError, ValueError):
    pass


class NonPowerOfTwoWeight(EulerSparseError, ValueError):
    pass


class NotEulerian(EulerSparseError, ValueError):
    pass


class NotSymmetric(EulerSparseError, ValueError):
    pass


class NotPSD(EulerSparseError, ValueError):
    pass


class Disconnected(EulerSparseError, ValueError):
    pass


class DimensionMismatch(EulerSparseError, ValueError):
    pass


class NotACycle(EulerSparseError, ValueError):
    pass


class ColourOutOfRange(EulerSparseError, ValueError):
    pass


class OracleStalled(EulerSparseError, RuntimeError):
    """A partial-colouring backend froze fewer coordinates than it promised."""


class BranchViolation(EulerSparseError, RuntimeError):
    """pcg/pcc invoked outside the branch condition that selects it."""


class TooLarge(EulerSparseError, ValueError):
    pass
