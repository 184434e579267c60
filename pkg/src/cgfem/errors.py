"""Exception types shared across the workbench."""


class InvalidParameterError(ValueError):
    """A constructor or operation received an out-of-range parameter."""


class DegenerateMeshError(RuntimeError):
    """A mesh element has a nonpositive Jacobian determinant."""


class UnisolvenceError(RuntimeError):
    """A node's unisolvent-set expansion exhausted the mesh."""


class SingularPointError(ValueError):
    """A gradient was requested exactly at the crack tip."""


class SolverError(RuntimeError):
    """The iterative linear solver failed to reach its tolerance."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class DegenerateDataError(ValueError):
    """A slope fit received nonpositive data (exact reproduction)."""
