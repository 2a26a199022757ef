class ContextEngineError(Exception):
    """Base class for every error raised by the engine."""


class DatasetError(ContextEngineError):
    def __init__(self, message, line_number=None):
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)
        self.line_number = line_number


class NoUserMessageError(ContextEngineError):
    pass


class ParameterCoercionError(ContextEngineError):
    def __init__(self, parameter, value, kind):
        super().__init__(f"Cannot coerce parameter '{parameter}' value {value!r} to {kind}")
        self.parameter = parameter
        self.value = value
        self.kind = kind


class RewardError(ContextEngineError):
    pass


class GrpoInputError(ContextEngineError):
    pass


class VerdictParseError(ContextEngineError):
    """Judge output did not follow the <reason>/<score> format."""


class MissingTagError(VerdictParseError):
    pass


class InvalidScoreError(VerdictParseError):
    pass


class ScoreOutOfRangeError(VerdictParseError):
    pass


class EndpointError(ContextEngineError):
    pass


class JudgeFormatError(ContextEngineError):
    pass


class PairwiseComparisonError(ContextEngineError):
    def __init__(self, episode_id, cause):
        super().__init__(f"Judging failed for episode '{episode_id}': {cause}")
        self.episode_id = episode_id
        self.cause = cause


class MockEndpointError(ContextEngineError):
    pass


class RunConfigError(ContextEngineError):
    pass
