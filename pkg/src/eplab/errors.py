"""Exception hierarchy shared by all eplab modules."""


class EplabError(Exception):
    """Base class for every error raised by eplab."""


class SpecificationError(EplabError, ValueError):
    """A model description violates one of its invariants."""

    def __init__(self, violations):
        if isinstance(violations, str):
            violations = [violations]
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class ConfigError(EplabError, ValueError):
    """A run configuration could not be parsed or validated."""

    def __init__(self, message, path=None):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class NumericalFailure(EplabError, ArithmeticError):
    """An eigen-decomposition missed its residual contract or did not converge."""

    def __init__(self, message, worst_residual=float("nan"), index=None):
        self.worst_residual = worst_residual
        self.index = index
        super().__init__(message)


class TrackingError(EplabError):
    """Label assignment stayed ambiguous after exhausting the refinement budget."""

    def __init__(self, message, step):
        self.step = step
        super().__init__(message)


class EncirclingError(EplabError):
    """A loop could not be tracked around a candidate point."""


class NoConvergence(EplabError):
    """An iterative search stopped without meeting its tolerance."""

    def __init__(self, message, last=None):
        self.last = last
        super().__init__(message)


class EpNotFound(NoConvergence):
    """The gap minimisation stagnated above the coalescence tolerance."""


class DivergingEM(EplabError, ArithmeticError):
    """The external-mixing norm is unbounded: the vector is self-orthogonal."""


class DomainError(EplabError, ValueError):
    """An argument lies outside the domain of a diagnostic."""
