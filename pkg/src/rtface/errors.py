"""Exception hierarchy shared by the pipeline modules."""


class PipelineError(Exception):
    """Base class for every error raised by rtface."""


class InvalidInputError(PipelineError, ValueError):
    """An argument violates its documented range or shape."""


class DegenerateInputError(InvalidInputError):
    """Geometrically degenerate input, e.g. coincident points."""


class OrderingError(PipelineError):
    """Frames arrived out of id order."""


class ContractError(PipelineError):
    """A checkout/complete protocol step was used out of turn."""


class ConfigError(PipelineError, ValueError):
    """Invalid pipeline configuration or scenario document."""
