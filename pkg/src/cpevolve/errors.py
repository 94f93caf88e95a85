"""Exception hierarchy shared by every module of the package."""


class CPEvolveError(Exception):
    """Base class for all package errors."""


# tsp
class UnsupportedMetric(CPEvolveError, ValueError):
    pass


class MalformedHeader(CPEvolveError, ValueError):
    pass


class CoordCountMismatch(CPEvolveError, ValueError):
    pass


class IndexOutOfRange(CPEvolveError, IndexError):
    pass


class InvalidPermutation(CPEvolveError, ValueError):
    pass


class NonPositiveBest(CPEvolveError, ValueError):
    pass


class TooLarge(CPEvolveError, ValueError):
    pass


# fwa
class EmptyPopulation(CPEvolveError, ValueError):
    pass


class TooShort(CPEvolveError, ValueError):
    pass


class NotEnoughCandidates(CPEvolveError, ValueError):
    pass


class BudgetTooSmall(CPEvolveError, ValueError):
    pass


# placement
class DimensionMismatch(CPEvolveError, ValueError):
    pass


class NonPositiveGamma(CPEvolveError, ValueError):
    pass


class DegenerateCurvature(CPEvolveError, ArithmeticError):
    pass


class InvalidTheta(CPEvolveError, ValueError):
    pass


class HookFailure(CPEvolveError, RuntimeError):
    pass


# visual
class KindInputMismatch(CPEvolveError, TypeError):
    pass


# orchestrator
class TemplateMissing(CPEvolveError, FileNotFoundError):
    pass


class ParentCountMismatch(CPEvolveError, ValueError):
    pass


class EmptyCode(CPEvolveError, ValueError):
    pass


class Oversized(CPEvolveError, ValueError):
    pass


class UnscoredCandidate(CPEvolveError, ValueError):
    pass


class BackendUnreachable(CPEvolveError, ConnectionError):
    pass


class ReplayExhausted(CPEvolveError, LookupError):
    pass


# similarity
class BothEmpty(CPEvolveError, ValueError):
    pass


class DegenerateVariance(CPEvolveError, ValueError):
    pass


class TooFewSamples(CPEvolveError, ValueError):
    pass
