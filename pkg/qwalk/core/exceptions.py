"""Custom exceptions for the engine.

Every exception carries the exit code the CLI returns for it:
2 for configuration, parse and validation problems, 3 for runtime
failures, 4 for inputs too large for an exact oracle and 5 for
multi-programming allocation failures.
"""

EXIT_CONFIG = 2
EXIT_RUNTIME = 3
EXIT_TOO_LARGE = 4
EXIT_ALLOCATION = 5


class QWalkException(Exception):
    """Base exception for the engine."""

    def __init__(self, message: str, exit_code: int = EXIT_RUNTIME):
        self.message = message
        self.exit_code = exit_code
        super().__init__(self.message)


# Input and configuration errors


class ConfigException(QWalkException):
    """Exception raised when an experiment config is invalid."""

    def __init__(self, message: str, exit_code: int = EXIT_CONFIG):
        super().__init__(message, exit_code)


class ParseException(QWalkException):
    """Exception raised when a data file cannot be parsed."""

    def __init__(self, message: str, exit_code: int = EXIT_CONFIG):
        super().__init__(message, exit_code)


class ValidationException(QWalkException):
    """Exception raised when a loaded object violates an invariant."""

    def __init__(self, message: str, field: str = "", exit_code: int = EXIT_CONFIG):
        self.field = field
        super().__init__(message, exit_code)


class InvalidSpecException(ValidationException):
    """Exception raised for an invalid synthetic device description."""


class LengthMismatchException(ParseException):
    """Exception raised when Pauli strings in one Hamiltonian differ in length."""


# Device and mapping errors


class QubitIndexError(QWalkException, IndexError):
    """Exception raised when a physical qubit index is outside the device."""


class NoFeasibleMapException(QWalkException):
    """Exception raised when no connected map of the requested size exists."""


class EmptyCandidatesException(QWalkException):
    """Exception raised when a selection is asked of an empty candidate set."""


class AllocationFailureException(QWalkException):
    """Exception raised when a job cannot be given a disjoint zone."""

    def __init__(self, job_id: str, message: str = "", exit_code: int = EXIT_ALLOCATION):
        self.job_id = job_id
        super().__init__(message or f"No feasible zone left for job {job_id}", exit_code)


# Circuit errors


class InvalidArityException(QWalkException):
    """Exception raised when a circuit or gate has an invalid qubit count."""


class EmptyGraphException(QWalkException):
    """Exception raised when a MaxCut instance has no edges."""


class UnroutableGateException(QWalkException):
    """Exception raised when two gate operands cannot be brought together."""


class UnmappedQubitException(QWalkException):
    """Exception raised when a routed gate touches a qubit outside its map."""


class MissingEdgePropsException(QWalkException):
    """Exception raised when a two-qubit gate acts on a non-coupled pair."""


# Numeric errors


class DomainError(QWalkException, ValueError):
    """Exception raised when a formula input is outside its domain."""


class OutOfRangeException(QWalkException, ValueError):
    """Exception raised when an iteration index lies outside a schedule."""


class InvalidShapeException(QWalkException, ValueError):
    """Exception raised when a cycle plan does not cover the schedule."""


class InvalidBudgetException(QWalkException, ValueError):
    """Exception raised when a run is given no iteration budget."""


class DivisionByZeroException(QWalkException, ZeroDivisionError):
    """Exception raised when a metric would divide by zero."""


class EmptyInputException(QWalkException, ValueError):
    """Exception raised when aggregating an empty record list."""


# Simulation errors


class TooManyQubitsException(QWalkException):
    """Exception raised when a simulation exceeds its qubit bound."""

    def __init__(self, message: str, exit_code: int = EXIT_TOO_LARGE):
        super().__init__(message, exit_code)


class TooLargeForExactException(TooManyQubitsException):
    """Exception raised when a graph is too large for brute-force MaxCut."""


class ParamLengthMismatchException(QWalkException, ValueError):
    """Exception raised when a parameter vector has the wrong length."""


class DimensionMismatchException(QWalkException, ValueError):
    """Exception raised when an observable and a circuit disagree in size."""


class ObjectiveFailureException(QWalkException):
    """Exception raised when the objective fails during optimization."""

    def __init__(self, message: str, trace=None, exit_code: int = EXIT_RUNTIME):
        self.trace = trace
        super().__init__(message, exit_code)


# Harness errors


class ExperimentFailureException(QWalkException):
    """Exception raised when one seed of an experiment fails; names both."""

    def __init__(self, experiment: str, seed: int, cause: Exception):
        self.experiment = experiment
        self.seed = seed
        detail = cause.message if isinstance(cause, QWalkException) else f"{type(cause).__name__}: {cause}"
        exit_code = cause.exit_code if isinstance(cause, QWalkException) else EXIT_RUNTIME
        super().__init__(f"experiment '{experiment}' seed {seed} failed: {detail}", exit_code)
