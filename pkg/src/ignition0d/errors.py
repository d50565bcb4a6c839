"""Exception types shared across the package."""


class ContractError(ValueError):
    """A documented precondition was violated by the caller."""


class ThermoRangeError(ContractError):
    """Temperature outside a species polynomial's valid range."""


class DegenerateMixtureError(ContractError):
    """Mixture state with no mass in any species."""


class MechanismError(ValueError):
    """Malformed or inconsistent thermo/mechanism data file."""


class IntegrationDivergedError(RuntimeError):
    """Non-finite state encountered during time integration."""

    def __init__(self, message, t=None, step=None, stage=None):
        super().__init__(message)
        self.t = t
        self.step = step
        self.stage = stage
