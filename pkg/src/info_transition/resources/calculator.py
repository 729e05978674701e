"""Resource accounting: state information, op rates, memory limits, stability verdicts and length scales."""
import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, Optional, Sequence, Tuple, Union

from ..magnitude.quantity import (
    LogQuantity,
    Unit,
    lq_cmp,
    lq_from_linear,
    lq_from_log10,
    lq_sum,
)
from .constants import DEFAULT_CONSTANTS, LN10, LN2, LOG10_2, PhysicalConstants

logger = logging.getLogger(__name__)

# 182 decades per degree of freedom, 7 degrees of freedom per nucleon pair
BLACKBODY_DECADES_PER_DOF = 182
DOF_PER_ATOM = 7


class Scenario(Enum):
    CHAOS = "chaos"
    COMPLETENESS = "completeness"
    EXPLICIT = "explicit"


@dataclass
class SystemSpec:
    n: int
    dims: Union[float, Tuple[float, ...]]
    energy_E: float
    coupling_J: float = 1.0
    mu: int = 64
    separable: bool = False

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if self.energy_E <= 0 or self.coupling_J <= 0:
            raise ValueError("Energies must be positive")
        if self.mu < 4 or self.mu % 2:
            raise ValueError(f"mu must be even and >= 4, got {self.mu}")
        if isinstance(self.dims, (list, tuple)):
            self.dims = tuple(float(d) for d in self.dims)
            if len(self.dims) != self.n:
                raise ValueError(f"Got {len(self.dims)} dimensions for {self.n} objects")
        if any(d < 1 for d in self.dim_list()):
            raise ValueError("Object dimensions must be >= 1")

    def dim_list(self) -> Tuple[float, ...]:
        if isinstance(self.dims, tuple):
            return self.dims
        return (float(self.dims),)

    @property
    def uniform(self) -> bool:
        return not isinstance(self.dims, tuple)

    def log10_dim_product(self) -> float:
        if self.uniform:
            return self.n * math.log10(self.dims)
        return sum(math.log10(d) for d in self.dims)

    def log10_dim_sum(self) -> float:
        if self.uniform:
            return math.log10(self.n) + math.log10(self.dims)
        return lq_sum(lq_from_linear(d) for d in self.dims).log10

    def log10_largest_dim(self) -> float:
        return max(math.log10(d) for d in self.dim_list())

    def to_dict(self) -> Dict[str, Any]:
        return {
            "n": self.n,
            "dims": list(self.dims) if isinstance(self.dims, tuple) else self.dims,
            "energy_E": self.energy_E,
            "coupling_J": self.coupling_J,
            "mu": self.mu,
            "separable": self.separable,
        }


@dataclass
class StabilityVerdict:
    stable: bool
    scenario: Scenario
    required: LogQuantity
    limit: LogQuantity
    margin_log10: float

    def to_dict(self) -> Dict[str, Any]:
        return {
            "stable": self.stable,
            "scenario": self.scenario.value,
            "required": self.required.to_dict(),
            "limit": self.limit.to_dict(),
            "margin_log10": self.margin_log10,
        }


def _verdict(scenario: Scenario, required: LogQuantity, limit: LogQuantity) -> StabilityVerdict:
    stable = lq_cmp(required, limit) <= 0
    return StabilityVerdict(stable, scenario, required, limit, limit.log10 - required.log10)


def _half_mu_log10(mu: float) -> float:
    """log10 of 2^(mu/2)"""
    return 0.5 * mu * LOG10_2


def state_information(spec: SystemSpec) -> LogQuantity:
    """Bits to register the state: mu per amplitude, with D^n amplitudes when entangled"""
    log_count = spec.log10_dim_sum() if spec.separable else spec.log10_dim_product()
    return lq_from_log10(math.log10(spec.mu) + log_count, Unit.BITS)


def classical_op_rate(E: float, constants: Optional[PhysicalConstants] = None) -> float:
    """Rate 2E/(pi hbar) at which a system of mean energy E flips orthogonal states"""
    if E <= 0:
        raise ValueError(f"Energy must be positive, got {E}")
    constants = constants or DEFAULT_CONSTANTS
    return 2.0 * E / (math.pi * constants.hbar)


def quantum_op_rate(spec: SystemSpec, constants: Optional[PhysicalConstants] = None) -> LogQuantity:
    constants = constants or DEFAULT_CONSTANTS
    log10 = (
        _half_mu_log10(spec.mu)
        + spec.log10_dim_product()
        + math.log10(spec.n)
        + math.log10(spec.energy_E)
        - math.log10(constants.hbar)
    )
    return lq_from_log10(log10, Unit.OPS_PER_SEC)


def clock_rate(spec: SystemSpec, constants: Optional[PhysicalConstants] = None) -> LogQuantity:
    """Computational speed per bit of state information"""
    constants = constants or DEFAULT_CONSTANTS
    log10 = (
        _half_mu_log10(spec.mu)
        + math.log10(spec.n)
        + math.log10(spec.energy_E)
        - math.log10(spec.mu)
        - math.log10(constants.hbar)
    )
    return lq_from_log10(log10, Unit.OPS_PER_SEC_PER_BIT)


def chaos_timescale(n: int, J: float, constants: Optional[PhysicalConstants] = None) -> float:
    if n < 1 or J <= 0:
        raise ValueError(f"Need n >= 1 and J > 0, got n={n}, J={J}")
    constants = constants or DEFAULT_CONSTANTS
    return constants.hbar / (n * J)


def memory_limit_chaos(E: float, J: float, mu: int) -> LogQuantity:
    """M1 = 2^(mu/2) E / J"""
    if E <= 0 or J <= 0:
        raise ValueError("Energies must be positive")
    return lq_from_log10(_half_mu_log10(mu) + math.log10(E) - math.log10(J), Unit.BITS)


def memory_limit_completeness(mu: float) -> LogQuantity:
    """M2 = mu 2^(mu/2)"""
    if mu <= 0:
        raise ValueError(f"mu must be positive, got {mu}")
    return lq_from_log10(math.log10(mu) + _half_mu_log10(mu), Unit.BITS)


def _stability_load(spec: SystemSpec) -> LogQuantity:
    # A separable system is judged one object at a time
    if spec.separable:
        return lq_from_log10(math.log10(spec.mu) + spec.log10_largest_dim(), Unit.BITS)
    return lq_from_log10(math.log10(spec.mu) + spec.log10_dim_product(), Unit.BITS)


def chaos_rate_requirement(
    spec: SystemSpec,
    omega_chi: Optional[float] = None,
    x: float = 1.0,
    constants: Optional[PhysicalConstants] = None,
) -> Tuple[LogQuantity, LogQuantity]:
    """Both sides of the chaos inequality as (available, required) op rates.

    available = 2^(mu/2) n E / hbar, required = omega_chi * M^x with M the
    state information; omega_chi defaults to n J / hbar.
    """
    constants = constants or DEFAULT_CONSTANTS
    if omega_chi is None:
        omega_chi = spec.n * spec.coupling_J / constants.hbar
    if omega_chi <= 0 or x <= 0:
        raise ValueError("omega_chi and x must be positive")
    available = lq_from_log10(
        _half_mu_log10(spec.mu) + math.log10(spec.n) + math.log10(spec.energy_E) - math.log10(constants.hbar),
        Unit.OPS_PER_SEC,
    )
    required = lq_from_log10(math.log10(omega_chi) + x * _stability_load(spec).log10, Unit.OPS_PER_SEC)
    return available, required


def stability_check(
    spec: SystemSpec,
    scenario: Scenario = Scenario.COMPLETENESS,
    omega_chi: Optional[float] = None,
    x: float = 1.0,
    threshold: Optional[LogQuantity] = None,
    constants: Optional[PhysicalConstants] = None,
) -> StabilityVerdict:
    """Compare the state information a spec needs with the memory its scenario allows.

    chaos: limit 2^(mu/2) n E / (hbar omega_chi), i.e. M1 at the default rate.
    completeness: limit M2 = mu 2^(mu/2).
    explicit: limit is the supplied threshold in bits.
    Equality counts as stable.
    """
    scenario = Scenario(scenario)
    if scenario == Scenario.CHAOS:
        available, required_rate = chaos_rate_requirement(spec, omega_chi, x, constants)
        # Divide both rates by omega_chi: M^x against 2^(mu/2) n E / (hbar omega_chi)
        required = lq_from_log10(x * _stability_load(spec).log10, Unit.BITS)
        log_omega = required_rate.log10 - required.log10
        verdict = _verdict(scenario, required, lq_from_log10(available.log10 - log_omega, Unit.BITS))
    elif scenario == Scenario.COMPLETENESS:
        verdict = _verdict(scenario, _stability_load(spec), memory_limit_completeness(spec.mu))
    else:
        if threshold is None:
            raise ValueError("Explicit stability check needs a threshold")
        verdict = _verdict(scenario, _stability_load(spec), threshold.with_unit(Unit.BITS))
    logger.debug(
        f"Stability ({scenario.value}) n={spec.n}: required 10^{verdict.required.log10:.4f}, "
        f"limit 10^{verdict.limit.log10:.4f}, stable={verdict.stable}"
    )
    return verdict


def max_entangled_objects(mu: float, D: float) -> int:
    """Largest n whose D^n amplitudes still satisfy the completeness bound"""
    if D < 2:
        raise ValueError(f"D must be >= 2, got {D}")
    return int(math.floor(mu / (2.0 * math.log2(D)) + 1e-9))


def max_objects_for_memory(M: LogQuantity, mu: float, D: float) -> float:
    """Solve mu * D^n = M for n"""
    if D < 2:
        raise ValueError(f"D must be >= 2, got {D}")
    return (M.log2 - math.log2(mu)) / math.log2(D)


def completeness_ok(D: float, mu: float) -> bool:
    """A single D-dimensional system is representable at fine-graining mu iff mu >= 2 log2 D"""
    return mu >= 2.0 * math.log2(D) - 1e-12


def info_length_scale(
    mu: float, rho: float, constants: Optional[PhysicalConstants] = None, derived: bool = False
) -> float:
    """Length below which matter of density rho stays within the completeness limit.

    With ``derived`` the coefficient carries the ln 2 that follows from equating
    10^(1274 n) with 2^(mu/2); the default keeps the commonly quoted form.
    """
    if rho <= 0 or mu <= 0:
        raise ValueError("mu and rho must be positive")
    constants = constants or DEFAULT_CONSTANTS
    coefficient = info_length_coefficient(derived)
    return (mu * constants.m_p / (coefficient * rho)) ** (1.0 / 3.0)


def info_length_coefficient(derived: bool = False) -> float:
    base = BLACKBODY_DECADES_PER_DOF * DOF_PER_ATOM * LN10
    return base / LN2 if derived else base


def info_length_scale_thermo(
    M2: LogQuantity, mu: float, rho: float, constants: Optional[PhysicalConstants] = None
) -> float:
    """Length scale from a blackbody gas of energy density rho c^2 whose entropy is ln(M2/mu)"""
    if rho <= 0:
        raise ValueError(f"rho must be positive, got {rho}")
    constants = constants or DEFAULT_CONSTANTS
    hbar, c = constants.hbar, constants.c
    kT = (15.0 * hbar ** 3 * c ** 5 * rho / math.pi ** 2) ** 0.25
    ln_ratio = (M2.log10 - math.log10(mu)) * LN10
    if ln_ratio <= 0:
        raise ValueError("M2 must exceed mu")
    return (hbar * c / kT) * (45.0 * ln_ratio / (4.0 * math.pi ** 2)) ** (1.0 / 3.0)


def unitary_phase_duration(lambda_u: float, c_s: float) -> float:
    if lambda_u <= 0 or c_s <= 0:
        raise ValueError("Length and signal speed must be positive")
    return lambda_u / c_s


def wavepacket_spread(dx0: float, mass: float, t: float, constants: Optional[PhysicalConstants] = None) -> float:
    """Width after free spreading for time t: dx0 + h t / (m dx0)"""
    if dx0 <= 0 or mass <= 0 or t < 0:
        raise ValueError("Need dx0 > 0, mass > 0, t >= 0")
    constants = constants or DEFAULT_CONSTANTS
    return dx0 + constants.h * t / (mass * dx0)


def thermal_wavepacket_width(mass: float, T: float, constants: Optional[PhysicalConstants] = None) -> float:
    constants = constants or DEFAULT_CONSTANTS
    if mass <= 0 or T <= 0:
        raise ValueError("mass and temperature must be positive")
    return constants.h / math.sqrt(mass * constants.k_B * T)


def thermal_spread_increment(
    mass: float, T: float, t: float, constants: Optional[PhysicalConstants] = None
) -> float:
    """Spread gained in time t by a packet that starts at the thermal width"""
    constants = constants or DEFAULT_CONSTANTS
    if mass <= 0 or T <= 0 or t < 0:
        raise ValueError("Need mass > 0, T > 0, t >= 0")
    return t * math.sqrt(constants.k_B * T / mass)


def correlation_length(lambda_d: float, lambda_u: float) -> float:
    """Coherence survives only below both the decoherence and the information length"""
    if lambda_d <= 0 or lambda_u <= 0:
        raise ValueError("Lengths must be positive")
    return min(lambda_d, lambda_u)


def block_spec(dims: Sequence[int], mu: int, energy_E: float = 1.0, coupling_J: float = 1.0) -> SystemSpec:
    """SystemSpec for one entangled block of subsystems"""
    return SystemSpec(n=len(dims), dims=tuple(dims), energy_E=energy_E, coupling_J=coupling_J, mu=mu)
