"""Exception hierarchy shared by every spotsim module.

Each exception carries a short machine category so the CLI and the HTTP
service can map failures to exit codes / status codes without string
matching on messages.
"""


class SpotSimError(Exception):
    """Base class for all spotsim errors."""

    category = "internal"
    exit_code = 1


class ParseError(SpotSimError):
    """Malformed input file. Carries the 1-based line number when known."""

    category = "parse"

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class OrderingError(ParseError):
    """Rows of a time series are not in strictly increasing time order."""

    category = "parse"


class ValidationError(SpotSimError):
    """A domain invariant does not hold for otherwise well-formed input."""

    category = "validation"


class InvalidInput(ValidationError):
    """An argument is outside the operation's domain."""

    category = "validation"


class InsufficientData(ValidationError):
    """Not enough observations to fit a model."""

    category = "validation"


class LengthMismatch(ValidationError):
    """Paired vectors have different lengths."""

    category = "validation"


class NoSustainableLoad(SpotSimError):
    """The first load-test sample already violates the sustainability rule."""

    category = "infeasible"
    exit_code = 2


class UnpricedType(ValidationError):
    """An allocation references an instance type with no price quote."""

    category = "validation"


class SearchSpaceTooLarge(ValidationError):
    """Brute-force enumeration would exceed the configured cap."""

    category = "validation"


class Infeasible(SpotSimError):
    """No allocation within the given bounds can host the required pods."""

    category = "infeasible"
    exit_code = 2


class NoFeasibleFound(Infeasible):
    """The genetic search finished without a single feasible individual."""

    category = "infeasible"
    exit_code = 2


class EmptyFront(Infeasible):
    """Selection was asked to pick from an empty Pareto front."""

    category = "infeasible"
    exit_code = 2


class UnknownNode(ValidationError):
    """A scaler operation referenced a node id not present in the cluster."""

    category = "validation"


class OutOfRange(ValidationError):
    """A lookup time falls outside the trace it indexes."""

    category = "validation"


class ScenarioError(ValidationError):
    """A scenario file is structurally valid but semantically unusable."""

    category = "validation"
