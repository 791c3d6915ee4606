"""Exception hierarchy shared by the library and the command line."""


class LoopSolitonError(Exception):
    """Base class for all library errors."""


class NonConvergence(LoopSolitonError):
    pass


class SingularMatrix(LoopSolitonError):
    pass


class DegenerateCurve(LoopSolitonError):
    pass


class OrderingAmbiguity(LoopSolitonError):
    pass


class BadModulus(LoopSolitonError):
    pass


class PoleProximity(LoopSolitonError):
    pass


class ZeroDenominator(LoopSolitonError):
    pass


class ThetaDivisor(PoleProximity):
    """Evaluation too close to the zero set of a sigma function."""


class BranchPointDegeneracy(LoopSolitonError):
    pass


class ConstraintViolated(LoopSolitonError):
    pass


class PoleOnPath(LoopSolitonError):
    pass
