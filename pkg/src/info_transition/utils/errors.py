"""Exception hierarchy shared by every info_transition module."""


class InfoTransitionError(Exception):
    """Base class for all package errors"""

    exit_code = 1


class MagnitudeDomainError(InfoTransitionError, ValueError):
    """A log-space magnitude was asked to hold a non-positive value"""
    pass


class UnitMismatchError(InfoTransitionError, TypeError):
    """LogQuantity unit tags cannot be combined"""
    pass


class DimensionMismatchError(InfoTransitionError, ValueError):
    """State or operator dimensions disagree, or subsystem indices are invalid"""
    pass


class CapacityExceededError(InfoTransitionError, ValueError):
    """Requested dense object exceeds the desk-scale cap"""
    pass


class CompletenessViolationError(InfoTransitionError, ValueError):
    """Fine-graining too coarse to represent the state at all"""
    pass


class NonHermitianError(InfoTransitionError, ValueError):
    """Hamiltonian is not Hermitian within tolerance"""
    pass


class NumericalWatchdogError(InfoTransitionError, ArithmeticError):
    """An integrator invariant drifted beyond its watchdog bound"""

    exit_code = 3


class StepBoundError(NumericalWatchdogError):
    """Time step violates the explicit-integrator stability bound"""
    pass


class NonProductBasisError(InfoTransitionError, ValueError):
    """Candidate transition basis is not a product basis"""
    pass


class StableSystemError(InfoTransitionError, RuntimeError):
    """Information transition requested for a computationally stable system"""
    pass


class UndersampledError(InfoTransitionError, ValueError):
    """Expected counts too small for a chi-squared test"""
    pass


class ScenarioError(InfoTransitionError, ValueError):
    """Scenario file failed schema validation or reference resolution"""

    exit_code = 2
