class KGDDIError(Exception):
    """Base class for errors raised by this package."""


class ParseError(KGDDIError, ValueError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class IntegrationError(KGDDIError):
    """Identifier mappings could not be closed (e.g. a mapping cycle)."""


class SamplingError(KGDDIError):
    """No admissible negative exists or could be found within the retry budget."""


class TrainingError(KGDDIError):
    def __init__(self, message, epoch=None):
        self.epoch = epoch
        if epoch is not None:
            message = f"epoch {epoch}: {message}"
        super().__init__(message)


class FitError(KGDDIError, ValueError):
    pass


class MetricError(KGDDIError, ValueError):
    pass


class StratificationError(KGDDIError, ValueError):
    pass


class PipelineError(KGDDIError):
    def __init__(self, stage, cause):
        self.stage = stage
        self.cause = cause
        super().__init__(f"stage {stage!r} failed: {cause}")


class ConfigError(KGDDIError, ValueError):
    pass


class ReportError(KGDDIError):
    pass
