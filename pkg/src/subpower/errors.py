"""Exception types shared across the package.

Plain ``ValueError`` is used for malformed arguments (shape mismatches,
out-of-range parameters).  The classes below mark failure modes a caller
may want to catch and react to.
"""


class EmptySubspaceError(RuntimeError):
    """Threshold rank rule retained zero singular values."""


class BoundUndefinedError(RuntimeError):
    """Perturbation reached or exceeded the reference singular value."""


class RankDeficiencyError(RuntimeError):
    """Grammian is numerically singular; rank-one terms are dependent."""


class DegenerateStepError(RuntimeError):
    """Ascent update vanished; caller should restart from a new point."""


class WeightUndefinedError(RuntimeError):
    """Deflation denominator is numerically zero; the candidate direction
    is far from any component or its weight is near zero."""


class NoComponentFoundError(RuntimeError):
    """All restarts fell below the acceptance threshold.

    The best trace seen is attached as ``best_trace``.
    """

    def __init__(self, message, best_trace=None):
        super().__init__(message)
        self.best_trace = best_trace
