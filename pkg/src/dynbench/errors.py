"""Exception and warning types shared across the package."""


class DynbenchError(Exception):
    """Base class for all package errors."""


class ZeroMassEvent(DynbenchError):
    """Conditioning on an event of zero probability mass."""


class NotEnumerable(DynbenchError):
    """Hypothesis class cannot be enumerated within the configured caps."""


class InvalidEpsilon(DynbenchError):
    """Accuracy parameter outside the range a construction supports."""


class NotAscending(DynbenchError):
    """Initial distribution is not ascending in the domain index order."""


class MembershipViolation(DynbenchError):
    """A scripted hypothesis is not a member of the requested class."""


class InfeasibleScript(DynbenchError):
    """A scripted hypothesis violates the accuracy contract on the round's
    distribution.  Carries the round index and both risks for diagnosis."""

    def __init__(self, round_index, achieved, minimum, epsilon):
        self.round_index = round_index
        self.achieved = achieved
        self.minimum = minimum
        self.epsilon = epsilon
        super().__init__(
            f"scripted hypothesis at call {round_index} has risk "
            f"{achieved:.9g} > min {minimum:.9g} + eps {epsilon:.9g}"
        )


class ScriptExhausted(DynbenchError):
    """Scripted minimizer was called more times than it has hypotheses."""


class ContractViolation(DynbenchError):
    """A minimizer produced output violating its own accuracy contract.
    Indicates an oracle bug, never a benign condition."""


class WeightShapeError(DynbenchError):
    """Explicit weight schedule does not match the round structure."""


class Converged(DynbenchError):
    """Margin error set has zero mass; the update loop is finished."""


class PerfectWeakLearner(DynbenchError):
    """Weak learner achieved zero weighted risk; step size is unbounded and
    the weak hypothesis itself is an exact classifier."""

    def __init__(self, hypothesis):
        self.hypothesis = hypothesis
        super().__init__("weak learner has zero weighted risk")


class StalledWeakLearner(DynbenchError):
    """Weak learner risk reached 1/2 or more, violating the weak-learning
    premise; the step size would be non-positive."""


class DescentViolation(DynbenchError):
    """Descent certificate failed; impossible when the oracle honours its
    contract, so this signals an oracle bug."""


class UndefinedZScore(DynbenchError):
    """Every round pair has a zero-mass joint error; the similarity score
    does not exist for this trace."""


class DegenerateVariance(DynbenchError):
    """Correlation requested on a sequence with zero variance."""


class ConfigError(DynbenchError):
    """Malformed experiment configuration."""


class BoundCheckFailure(DynbenchError):
    """A theorem bound did not hold on a verification run."""


class DeltaNotDominant(UserWarning):
    """Noisy-mass precondition delta > epsilon is unmet; concentration bound
    checks are skipped for the run."""
