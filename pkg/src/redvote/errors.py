"""Exception hierarchy shared by the model, workflow and CLI layers."""


class RedvoteError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(RedvoteError):
    """A model, parameter set or workflow failed structural validation."""


class SolverError(RedvoteError):
    """A solver could not produce a result for a structurally valid model."""


class ZeroEvidenceError(SolverError):
    """Conditioning evidence has probability zero; the observation is inconsistent."""
