"""Exception hierarchy.

Two branches matter operationally: ConfigurationError (bad inputs, exit
code 2 in the CLI) and NumericalError (non-convergence, exit code 3).
Everything else derives from ObfevalError so callers can catch broadly.
"""


class ObfevalError(Exception):
    """Base class for all toolkit errors."""


class ConfigurationError(ObfevalError):
    """Invalid user-supplied input: bad parameters, malformed configs.

    ``field`` optionally names the offending config field path
    (e.g. "measures[0].params.tol").
    """

    def __init__(self, message, field=None):
        if field is not None:
            message = f"{field}: {message}"
        super().__init__(message)
        self.field = field


class UnknownLabelError(ConfigurationError):
    """A symbol is not a member of the alphabet it is used against."""


class AlphabetMismatchError(ConfigurationError):
    """Two objects that must share an alphabet do not."""


class DistributionError(ConfigurationError):
    """A probability vector or matrix violates its invariants."""


class ZeroEvidenceError(ObfevalError):
    """Observed symbol has zero marginal probability under the model."""


class AbsoluteContinuityError(ObfevalError):
    """KL divergence requested where q = 0 on the support of p."""


class ParameterRangeError(ConfigurationError):
    """Mechanism parameter outside its admissible range."""


class IncompletePartitionError(ConfigurationError):
    """Generalization partition does not cover the input alphabet."""


class UnknownMechanismError(ConfigurationError):
    """Mechanism name not in the registry; message lists supported names."""


class UnknownMeasureError(ConfigurationError):
    """Measure name not in the registry; message lists supported names."""


class UnknownArchitectureError(ConfigurationError):
    """Disclosure architecture name outside the known ladder."""


class EnumerationCapError(ConfigurationError):
    """Exhaustive enumeration would exceed the configured cap."""


class DogmaticExclusionError(ObfevalError):
    """Adversary belief assigns zero mass where the truth has mass."""


class DegenerateGainError(ObfevalError):
    """Prior g-vulnerability is zero; leakage ratio undefined."""


class NumericalError(ObfevalError):
    """Numerical procedure failed; CLI exit code 3."""


class ConvergenceError(NumericalError):
    """Iteration hit max_iter before reaching tolerance.

    Carries the best certified bracket so callers can decide whether the
    partial answer is usable.
    """

    def __init__(self, message, lower, upper, iterations):
        super().__init__(
            f"{message} (best bracket [{lower:.12g}, {upper:.12g}] "
            f"after {iterations} iterations)"
        )
        self.lower = lower
        self.upper = upper
        self.iterations = iterations
