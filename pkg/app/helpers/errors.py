"""Exception hierarchy shared by every module

Each error carries the process exit code the command line reports for it:
1 for invalid input, 2 for runtime or numerical failures.
"""

from typing import Any, Optional

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_RUNTIME = 2


class WorkbenchError(Exception):
    """Base exception for workbench errors"""

    exit_code = EXIT_RUNTIME

    def __init__(self, message: str, exit_code: Optional[int] = None):
        self.message = message
        if exit_code is not None:
            self.exit_code = exit_code
        super().__init__(self.message)


class InputValidationError(WorkbenchError):
    """Invalid user input: files, shapes, configuration"""

    exit_code = EXIT_VALIDATION


class ShapeError(InputValidationError, ValueError):
    """Array dimensions do not agree"""


class ConfigError(InputValidationError):
    """Configuration file or flags are invalid"""


class ManifestError(InputValidationError):
    """Malformed or inconsistent dataset manifest"""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class FeatureFormatError(InputValidationError):
    """Feature or checkpoint file is not in the expected binary format"""


class TruncatedFeatureFileError(FeatureFormatError):
    """File ended before the tensor of a given scale was complete"""

    def __init__(self, message: str, scale_index: int):
        self.scale_index = scale_index
        super().__init__(f"scale {scale_index}: {message}")


class SplitError(InputValidationError):
    """A leakage-safe split cannot be formed from the manifest"""


class SynthesisError(InputValidationError):
    """Anomaly synthesis has no valid region to work on"""


class NumericalError(WorkbenchError):
    """Non-finite values produced by a numerical routine"""

    exit_code = EXIT_RUNTIME


class TrainingDivergedError(NumericalError):
    """Training loss became non-finite"""

    def __init__(self, message: str, epoch: int, step: int):
        self.epoch = epoch
        self.step = step
        super().__init__(f"epoch {epoch}, step {step}: {message}")


class FoldFailedError(WorkbenchError):
    """One fold of the risk-estimation protocol failed"""

    def __init__(self, fold: int, cause: BaseException):
        self.fold = fold
        self.cause = cause
        exit_code = getattr(cause, "exit_code", EXIT_RUNTIME)
        super().__init__(f"fold {fold} failed: {cause}", exit_code=exit_code)


class ProtocolFailedError(WorkbenchError):
    """At least one fold failed; the partial report is attached"""

    def __init__(self, message: str, partial_report: Any):
        self.partial_report = partial_report
        super().__init__(message, exit_code=EXIT_RUNTIME)
