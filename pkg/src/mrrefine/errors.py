"""Exception hierarchy. CLI exit codes hang off these classes."""


class MRRefineError(Exception):
    exit_code = 1


class ConfigError(MRRefineError, ValueError):
    """Bad configuration, flag value or input document."""


class ValueOverflowError(MRRefineError, OverflowError):
    pass


class FormatError(MRRefineError, ValueError):
    """An artifact file does not follow its documented format."""


class SutError(MRRefineError):
    """The system under test could not produce a value."""

    exit_code = 2

    def __init__(self, message: str, *, function: str | None = None, datum_id: int | None = None):
        super().__init__(message)
        self.function = function
        self.datum_id = datum_id


class UnknownFunctionError(SutError):
    pass


class SutProcessError(SutError):
    pass


class SutOutputError(SutError):
    pass


class CampaignAborted(MRRefineError):
    """Raised when a campaign stops early; ``records`` holds the gap-free prefix."""

    exit_code = 2

    def __init__(self, cause: Exception, records: list):
        super().__init__(f"campaign aborted: {cause}")
        self.cause = cause
        self.records = records


class EmptyLogError(MRRefineError):
    pass


class UndefinedConfidenceError(MRRefineError, ZeroDivisionError):
    pass


class BlockedCampaignError(MRRefineError):
    exit_code = 3


class UnsatisfiableConditionError(MRRefineError):
    pass
