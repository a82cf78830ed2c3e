"""Exception and warning taxonomy shared by all modules."""


class ComputationError(Exception):
    """A computation refused or failed for a documented mathematical reason.

    The CLI maps these to exit code 1.
    """


class ConfigError(Exception):
    """A problem description could not be parsed or validated (CLI exit 2)."""


# -- grid construction --------------------------------------------------------

class InvalidSpacing(ComputationError):
    pass


class EmptyInterior(ComputationError):
    pass


class HaloTooSmall(ComputationError):
    pass


# -- coefficient / kernel validation ------------------------------------------

class NonSymmetricA(ComputationError):
    pass


class EllipticityViolated(ComputationError):
    pass


class NegativeWeight(ComputationError):
    pass


class SupportExceedsHalo(ComputationError):
    pass


# -- eigensolver ---------------------------------------------------------------

class NotConverged(ComputationError):
    pass


class NonPositiveEigenvector(ComputationError):
    """The shifted iteration produced a vector with nonpositive entries.

    For a monotone assembly this signals a broken irreducible structure
    (an assembly bug), never a legitimate outcome.
    """


class NonPositiveInput(ComputationError):
    pass


class TooLargeForDenseCheck(ComputationError):
    pass


# -- sweeps --------------------------------------------------------------------

class MonotonicityViolation(ComputationError):
    pass


class WindowOutsideSmallestDomain(ComputationError):
    pass


class NoWitnessWithinTruncation(ComputationError):
    pass


# -- maximum principle ----------------------------------------------------------

class BracketInvalid(ComputationError):
    pass


class SingularSystem(ComputationError):
    pass


class UnboundedRatio(ComputationError):
    pass


class EigenvalueNotPositive(ComputationError):
    pass


# -- semilinear ------------------------------------------------------------------

class OrderingBroken(ComputationError):
    pass


# -- kernel analysis / harmonic solves --------------------------------------------

class NegativeSolution(ComputationError):
    pass


# -- stochastic oracle -------------------------------------------------------------

class ThinningBoundExceeded(ComputationError):
    pass


class AllPathsDead(ComputationError):
    pass


# -- CLI / artifacts ----------------------------------------------------------------

class ConfigParse(ConfigError):
    pass


class UnknownCommand(ConfigError):
    pass


class SchemaMismatch(ConfigError):
    pass


class ArtifactWriteFailure(ComputationError):
    pass


# -- warnings -------------------------------------------------------------------------

class NonMonotoneSequence(UserWarning):
    """Diagnostic: a sweep sequence increased where theory says nonincreasing."""


class ReducibleOperator(UserWarning):
    """The operator graph is disconnected; the principal pair lives on one component."""


class SubsolutionSlack(UserWarning):
    """A sub/supersolution inequality holds only up to the requested tolerance."""
