"""Exception types shared across the solver modules."""


class ShockAsymError(Exception):
    """Base class for all solver failures."""


class ConfigError(ShockAsymError, ValueError):
    """Problem description is malformed or structurally inconsistent."""


class NumericalError(ShockAsymError, RuntimeError):
    """A numerical routine left its domain of validity."""


class DomainError(NumericalError):
    """Query point lies outside a field's domain of dependence."""


class FocusingError(NumericalError):
    """Same-family characteristics crossed (gradient blow-up)."""


class OutOfHullError(NumericalError):
    """Query point lies outside the hull of a characteristic fan."""


class CoarseFanError(NumericalError):
    """Fan spacing too wide for reliable interpolation, even after refinement."""


class JumpCollapseError(NumericalError):
    """A jump in the denominator of a shock-speed quotient vanished."""


class DegenerateCoefficientError(NumericalError):
    """A linear jump-condition solve lost its leading coefficient."""


class RecoveryError(NumericalError):
    """Inversion of the conserved density for the primitive state failed."""


class CFLError(NumericalError):
    """Stable time step fell below the minimum allowed."""


class FrontError(NumericalError):
    """Shock-front extraction could not locate a usable front."""
