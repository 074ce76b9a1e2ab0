"""Exception hierarchy. Each class carries the CLI exit code it maps to."""


class SGPError(Exception):
    exit_code = 1


class InputValidationError(SGPError, ValueError):
    exit_code = 2


class SingularParametrizationError(InputValidationError):
    """Raised when a Cayley vector or rotation lies outside the chart."""


class DegenerateInstanceError(SGPError):
    exit_code = 3

    def __init__(self, message, stage=None):
        super().__init__(message if stage is None else f"[{stage}] {message}")
        self.stage = stage


class SolverFailureError(DegenerateInstanceError):
    pass


class StructureError(SGPError):
    exit_code = 4
