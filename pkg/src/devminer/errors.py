"""Exception types shared across the toolchain."""


class DevminerError(Exception):
    """Base class for all toolchain errors."""


class IngestError(DevminerError):
    """Source repository or export could not be read."""


class LogParseError(IngestError):
    """Malformed log-export content."""

    def __init__(self, message: str, line_number: int):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


class LabelImportError(DevminerError):
    """Label CSV violates the expected schema."""

    def __init__(self, message: str, row_number: int):
        super().__init__(f"row {row_number}: {message}")
        self.row_number = row_number


class LabelConflictError(DevminerError):
    """Duplicate rows disagree on the verdict for one commit."""


class DanglingCommitError(DevminerError):
    """A label references a commit id absent from the commit stream."""


class ReplayError(DevminerError):
    """Hunk replay hit indices inconsistent with the tracked snapshot."""

    def __init__(self, message: str, commit_id: str):
        super().__init__(f"commit {commit_id}: {message}")
        self.commit_id = commit_id


class UndefinedMetricError(DevminerError):
    """Metric is undefined for this input (e.g. ownership of a 0-line script)."""


class EncodingError(DevminerError):
    """Script bytes are not valid UTF-8."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"byte offset {offset}: {message}")
        self.offset = offset


class DegenerateDataError(DevminerError):
    """Input has no usable variance for the requested computation."""


class TrainingError(DevminerError):
    """Learner cannot be trained on the given data."""


class DataError(DevminerError):
    """Dataset shape makes the requested evaluation impossible."""


class ConfigError(DevminerError):
    """Pipeline configuration is missing or invalid."""


class PipelineStageError(DevminerError):
    """A pipeline stage failed; carries the stage name."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"stage {stage}: {cause}")
        self.stage = stage
        self.cause = cause
