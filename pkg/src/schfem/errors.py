"""Exception types shared across the package."""


class SchfemError(Exception):
    """Base class for all schfem errors."""


class MeshError(SchfemError, ValueError):
    """Invalid mesh construction arguments or a malformed mesh."""


class AssemblyError(SchfemError):
    """Matrix assembly failed (e.g. degenerate triangle)."""


class LinearSolveError(SchfemError):
    """A linear solve did not reach the required residual tolerance."""


class MeanZeroError(SchfemError, ValueError):
    """A field that must have zero L2-mean does not."""


class NewtonError(SchfemError):
    """Newton iteration failed to converge.

    Carries the last residual plus step/path indices when known.
    """

    def __init__(self, message, residual=None, iterations=None,
                 step_index=None, path_index=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations
        self.step_index = step_index
        self.path_index = path_index

    def __str__(self):
        where = ""
        if self.step_index is not None:
            where = f" at step {self.step_index}"
            if self.path_index is not None:
                where += f" of path {self.path_index}"
        return super().__str__() + where

    def __reduce__(self):
        # Keep the annotations through pickling across worker processes.
        return (self.__class__, (self.args[0], self.residual, self.iterations,
                                 self.step_index, self.path_index))


class ConfigError(SchfemError, ValueError):
    """Bad run configuration (unknown key, unparseable value, missing field)."""
