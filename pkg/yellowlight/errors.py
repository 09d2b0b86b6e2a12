class YellowLightException(Exception):
    """Base class for every error raised by yellowlight."""

    def __init__(self, message):
        super().__init__(message)


class ValidationException(YellowLightException):
    """Exception thrown when an input violates a documented precondition."""

    def __init__(self, message):
        super().__init__(message)


class InvalidStateException(ValidationException):
    def __init__(self, state, message="Invalid trajectory state."):
        super().__init__(f"{state} -> {message}")


class InvalidEvidenceException(ValidationException):
    def __init__(self, variable, message="Evidence value is not finite."):
        super().__init__(f"{variable} -> {message}")


class InvalidEnvironmentException(ValidationException):
    def __init__(self, field, message="Invalid environment state."):
        super().__init__(f"{field} -> {message}")


class ParameterException(ValidationException):
    def __init__(self, parameter, message="Parameter out of range."):
        super().__init__(f"{parameter} -> {message}")


class ShapeException(ValidationException):
    def __init__(self, what, message="Mismatched lengths."):
        super().__init__(f"{what} -> {message}")


class DegenerateDataException(ValidationException):
    def __init__(self, what, message="Not enough data to fit."):
        super().__init__(f"{what} -> {message}")


class PhaseException(ValidationException):
    def __init__(self, now, message="Time is outside the yellow phase."):
        super().__init__(f"t={now} -> {message}")


class CoverageException(ValidationException):
    def __init__(self, what, message="Trajectory does not cover the end of the yellow phase."):
        super().__init__(f"{what} -> {message}")


class InfeasibleSceneException(ValidationException):
    def __init__(self, what, message="Vehicle overlaps the front vehicle."):
        super().__init__(f"{what} -> {message}")


class EmptyEvaluationException(ValidationException):
    def __init__(self, what, message="Nothing to evaluate."):
        super().__init__(f"{what} -> {message}")


class TrainingDataException(ValidationException):
    def __init__(self, demo_index, message="Demonstration scene is infeasible."):
        super().__init__(f"demo {demo_index} -> {message}")


class IngestionException(YellowLightException):
    """Exception thrown when an input file cannot be turned into trajectories."""

    def __init__(self, path, message):
        super().__init__(f"{path} -> {message}")


class MissingColumnException(IngestionException):
    def __init__(self, path, column):
        super().__init__(path, f"missing column '{column}'")


class UnsortedTimestampsException(IngestionException):
    def __init__(self, path, rows):
        super().__init__(path, f"timestamps not strictly increasing at rows {_rows(rows)}")


class NonFiniteRowException(IngestionException):
    def __init__(self, path, rows):
        super().__init__(path, f"non-finite values at rows {_rows(rows)}")


class ImplausibleSpeedException(IngestionException):
    def __init__(self, path, rows):
        super().__init__(path, f"speed outside [0, 60] m/s at rows {_rows(rows)}")


def _rows(rows, limit=10):
    rows = list(rows)
    shown = ", ".join(str(r) for r in rows[:limit])
    if len(rows) > limit:
        shown += f", ... ({len(rows)} rows)"
    return shown
