"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain an operation is defined on."""


class QuadratureError(RuntimeError):
    """Adaptive quadrature failed to reach its tolerance.

    ``abserr`` carries the achieved error estimate.
    """

    def __init__(self, message: str, abserr: float):
        super().__init__(f"{message} (achieved error estimate {abserr:.3e})")
        self.abserr = abserr
