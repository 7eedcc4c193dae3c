"""Exception hierarchy shared by the library and the command line."""


class IFRError(Exception):
    """Base class for all errors raised by :mod:`ifrci`."""


class DomainError(IFRError, ValueError):
    """An argument lies outside the domain of the requested operation."""


class NoPositivesError(DomainError):
    """The sample contains no positives, so the IFR estimate is undefined.

    The (zero) estimate of the number of infected units is still available
    as :attr:`n_infected_hat`.
    """

    def __init__(self, message="no positives in the sample: IFR estimate is undefined",
                 n_infected_hat=0.0):
        super().__init__(message)
        self.n_infected_hat = n_infected_hat


class NumericalError(IFRError, ArithmeticError):
    """A numerical procedure could not produce a result (empty region, empty range)."""
