"""Exception hierarchy. Every error carries a short machine-readable ``code``."""


class QTDError(Exception):
    code = "error"


class InvalidOperator(QTDError):
    code = "invalid-operator"


class InvalidState(QTDError):
    code = "invalid-state"


class InvalidRate(QTDError):
    code = "invalid-rate"


class InvalidTemperature(QTDError):
    code = "invalid-temperature"


class InvalidProtocol(QTDError):
    code = "invalid-protocol"


class NumericalInconsistency(QTDError):
    code = "numerical-inconsistency"


class DegenerateSystem(QTDError):
    code = "degenerate-system"


class ConstitutiveViolation(QTDError):
    code = "constitutive-violation"


class InfeasibleExchange(QTDError):
    code = "infeasible-exchange"


class ContactTemperatureError(QTDError):
    """Base for the cases where no positive contact temperature exists."""

    code = "contact-temperature"


class InversionDomain(ContactTemperatureError):
    code = "inversion-domain"


class GroundStateDomain(ContactTemperatureError):
    code = "ground-state-domain"


class DegenerateSpectrum(ContactTemperatureError):
    code = "degenerate-spectrum"


class UndefinedAtEquilibrium(ContactTemperatureError):
    code = "undefined-at-equilibrium"


class IntegrationFailure(QTDError):
    code = "integration-failure"


class ConfigError(QTDError):
    """Scenario document problems. ``path`` points into the document."""

    code = "config-error"

    def __init__(self, message, path=""):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class IoError(QTDError):
    code = "io-error"
