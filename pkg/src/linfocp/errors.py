"""Exception hierarchy shared by all modules.

Every error carries the name of the module that raised it so the CLI can
print a one-line diagnostic and pick the right exit code.
"""


class LinfOcpError(Exception):
    """Base class for all package errors."""

    module = "linfocp"

    def __init__(self, message, *, module=None, iteration=None):
        super().__init__(message)
        if module is not None:
            self.module = module
        self.iteration = iteration

    def diagnostic(self):
        where = self.module
        if self.iteration is not None:
            where += f" (iteration {self.iteration})"
        return f"{where}: {self}"


class InputError(LinfOcpError, ValueError):
    """Invalid argument or configuration."""


class DomainError(InputError):
    """Point outside the computational domain."""


class MeshStructureError(LinfOcpError):
    """Degenerate or non-conforming mesh."""


class NumericalError(LinfOcpError, ArithmeticError):
    """Non-finite data or a failed linear solve."""

    def __init__(self, message, *, residual=None, **kwargs):
        super().__init__(message, **kwargs)
        self.residual = residual


class NonConvergenceError(NumericalError):
    """Iteration cap hit; carries the last iterate."""

    def __init__(self, message, *, last_iterate=None, **kwargs):
        super().__init__(message, **kwargs)
        self.last_iterate = last_iterate
