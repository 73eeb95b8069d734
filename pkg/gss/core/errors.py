"""Exception hierarchy; every error knows the CLI exit code it maps to."""


class GSSError(Exception):
    """Base class for all gss errors"""

    exit_code: int = 2


class GraphValidationError(GSSError, ValueError):
    """Malformed graph input (loops, ids out of range, bad orders)"""


class WalkConfigError(GSSError, ValueError):
    """Invalid (r, w, u) or a graph the walker cannot run on"""


class ReducibleChainError(GSSError):
    """Pair chain is reducible (disconnected graph with r = 0)"""


class ConvergenceError(GSSError):
    """An iterative solve did not reach its tolerance"""


class ExactModeUnavailableError(GSSError):
    """Exact-stationary start requested above the configured state cap"""


class DesignError(GSSError, ValueError):
    """Invalid sampling design parameters"""


class NotEnumerableError(DesignError):
    """Design has no finite sample space we can list"""


class EstimatorError(GSSError, ValueError):
    """Estimator preconditions violated"""


class ConstructionError(GSSError):
    """Randomized graph construction hit a dead end"""

    def __init__(self, message: str, retries: int = 0):
        super().__init__(f"{message} (after {retries} retries)")
        self.retries = retries


class EmptySearchError(GSSError):
    """Design search received no candidates"""

    exit_code = 3


class ReproductionFailure(GSSError):
    """A strict reproduction target was missed"""

    exit_code = 4
