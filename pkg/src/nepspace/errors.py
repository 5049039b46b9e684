"""Exception hierarchy shared by all nepspace modules."""


class NepspaceError(Exception):
    """Base class for every error raised by nepspace."""


class DecompositionError(NepspaceError):
    """A dense decomposition (QZ, SVD) failed to converge."""

    def __init__(self, what, size):
        self.size = size
        super().__init__(f"{what} did not converge for a matrix of size {size}")


class SingularMatrixError(NepspaceError):
    """Matrix is singular to working precision."""

    def __init__(self, message, cond=None, column=None):
        self.cond = cond
        self.column = column
        super().__init__(message)


class PoleError(NepspaceError):
    """Evaluation requested at a pole (or branch point) of the function."""

    def __init__(self, s, detail=""):
        self.s = complex(s)
        msg = f"evaluation point {self.s} is a pole"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class MatrixMarketError(NepspaceError):
    """Malformed Matrix Market input."""

    def __init__(self, path, line, message):
        self.path = str(path)
        self.line = line
        super().__init__(f"{path}:{line}: {message}")


class ReducedSpectrumEmpty(NepspaceError):
    """The projected problem has no admissible eigenvalue."""


class IncreaseProbes(NepspaceError):
    """Contour rank test saturated; more probe columns or moments are needed."""

    def __init__(self, rank, capacity):
        self.rank = rank
        self.capacity = capacity
        super().__init__(
            f"rank test inconclusive: rank {rank} equals probe capacity {capacity}; increase probes"
        )


class NoConvergence(NepspaceError):
    """An inner iteration (Newton, contour retries) did not converge."""
