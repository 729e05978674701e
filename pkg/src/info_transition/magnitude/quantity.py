"""Positive magnitudes stored as log10, for bit counts and op rates far beyond float range."""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, Iterable

from ..utils.errors import MagnitudeDomainError, UnitMismatchError

# Linear values are only materialised below this exponent
MAX_LINEAR_LOG10 = 300.0
# Operands more than this many decades apart add to the larger one
ADD_ABSORB_DECADES = 30.0
CMP_TOLERANCE = 1e-9

_LOG10_2 = math.log10(2.0)


class Unit(Enum):
    BITS = "bits"
    OPS_PER_SEC = "ops_per_sec"
    OPS_PER_SEC_PER_BIT = "ops_per_sec_per_bit"
    DIMENSIONLESS = "dimensionless"
    METERS = "meters"
    SECONDS = "seconds"
    JOULES = "joules"
    COUNT = "count"


_SCALAR_UNITS = {Unit.DIMENSIONLESS, Unit.COUNT}

# (numerator, denominator) -> quotient, beyond the generic U/U and U/scalar rules
_QUOTIENTS = {
    (Unit.OPS_PER_SEC, Unit.BITS): Unit.OPS_PER_SEC_PER_BIT,
}
# unordered pairs -> product, beyond the generic U*scalar rule
_PRODUCTS = {
    frozenset((Unit.OPS_PER_SEC_PER_BIT, Unit.BITS)): Unit.OPS_PER_SEC,
}


@dataclass(frozen=True)
class LogQuantity:
    log10: float
    unit: Unit = Unit.DIMENSIONLESS

    def __post_init__(self):
        if not math.isfinite(self.log10):
            raise MagnitudeDomainError(f"log10 must be finite, got {self.log10}")

    @property
    def log2(self) -> float:
        return self.log10 / _LOG10_2

    @property
    def ln(self) -> float:
        return self.log10 * math.log(10.0)

    def to_linear(self) -> float:
        """Linear value; refuses when it would overflow a double"""
        if self.log10 > MAX_LINEAR_LOG10:
            raise MagnitudeDomainError(
                f"10^{self.log10:.6g} {self.unit.value} cannot be materialised as a float"
            )
        return 10.0 ** self.log10

    def scaled(self, factor: float) -> LogQuantity:
        """Multiply by a positive plain number, keeping the unit"""
        if factor <= 0:
            raise MagnitudeDomainError(f"Scale factor must be positive, got {factor}")
        return LogQuantity(self.log10 + math.log10(factor), self.unit)

    def with_unit(self, unit: Unit) -> LogQuantity:
        return LogQuantity(self.log10, unit)

    def to_dict(self) -> Dict[str, Any]:
        return {"log10": self.log10, "unit": self.unit.value}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> LogQuantity:
        return cls(float(data["log10"]), Unit(data["unit"]))

    def __mul__(self, other: LogQuantity) -> LogQuantity:
        return lq_mul(self, other)

    def __truediv__(self, other: LogQuantity) -> LogQuantity:
        return lq_div(self, other)

    def __pow__(self, k: float) -> LogQuantity:
        return lq_pow(self, k)

    def __add__(self, other: LogQuantity) -> LogQuantity:
        return lq_add(self, other)

    def __lt__(self, other: LogQuantity) -> bool:
        return lq_cmp(self, other) < 0

    def __le__(self, other: LogQuantity) -> bool:
        return lq_cmp(self, other) <= 0

    def __gt__(self, other: LogQuantity) -> bool:
        return lq_cmp(self, other) > 0

    def __ge__(self, other: LogQuantity) -> bool:
        return lq_cmp(self, other) >= 0

    def __str__(self) -> str:
        if abs(self.log10) < 15:
            return f"{10.0 ** self.log10:.4g} {self.unit.value}"
        return f"10^{self.log10:.6g} {self.unit.value}"


def lq_from_linear(x: float, unit: Unit = Unit.DIMENSIONLESS) -> LogQuantity:
    if x is None or not x > 0 or not math.isfinite(x):
        raise MagnitudeDomainError(f"LogQuantity requires a positive finite value, got {x}")
    return LogQuantity(math.log10(x), unit)


def lq_from_log10(log10: float, unit: Unit = Unit.DIMENSIONLESS) -> LogQuantity:
    return LogQuantity(float(log10), unit)


def lq_from_log2(log2: float, unit: Unit = Unit.DIMENSIONLESS) -> LogQuantity:
    return LogQuantity(float(log2) * _LOG10_2, unit)


def _product_unit(a: Unit, b: Unit) -> Unit:
    if a in _SCALAR_UNITS and b in _SCALAR_UNITS:
        return Unit.COUNT if Unit.COUNT in (a, b) else Unit.DIMENSIONLESS
    if b in _SCALAR_UNITS:
        return a
    if a in _SCALAR_UNITS:
        return b
    product = _PRODUCTS.get(frozenset((a, b)))
    if product is None:
        raise UnitMismatchError(f"Cannot multiply {a.value} by {b.value}")
    return product


def _quotient_unit(a: Unit, b: Unit) -> Unit:
    if a == b:
        return Unit.DIMENSIONLESS
    if b in _SCALAR_UNITS:
        return a
    quotient = _QUOTIENTS.get((a, b))
    if quotient is None:
        raise UnitMismatchError(f"Cannot divide {a.value} by {b.value}")
    return quotient


def lq_mul(a: LogQuantity, b: LogQuantity) -> LogQuantity:
    return LogQuantity(a.log10 + b.log10, _product_unit(a.unit, b.unit))


def lq_div(a: LogQuantity, b: LogQuantity) -> LogQuantity:
    return LogQuantity(a.log10 - b.log10, _quotient_unit(a.unit, b.unit))


def lq_pow(a: LogQuantity, k: float) -> LogQuantity:
    """Raise to a real power.

    Only scalar-like units (dimensionless, count) may be raised to a power other
    than 1; a physical tag would otherwise need a compound unit this enum lacks.
    """
    if a.unit not in _SCALAR_UNITS and k != 1:
        raise UnitMismatchError(f"Cannot raise {a.unit.value} to power {k}")
    return LogQuantity(a.log10 * k, a.unit)


def lq_add(a: LogQuantity, b: LogQuantity) -> LogQuantity:
    """Log-sum-exp addition; a much smaller operand is absorbed"""
    if a.unit != b.unit:
        raise UnitMismatchError(f"Cannot add {a.unit.value} to {b.unit.value}")
    hi, lo = (a, b) if a.log10 >= b.log10 else (b, a)
    gap = hi.log10 - lo.log10
    if gap > ADD_ABSORB_DECADES:
        return hi
    return LogQuantity(hi.log10 + math.log10(1.0 + 10.0 ** (-gap)), a.unit)


def lq_sum(values: Iterable[LogQuantity]) -> LogQuantity:
    values = list(values)
    if not values:
        raise MagnitudeDomainError("Sum of no magnitudes is zero, which is not representable")
    total = values[0]
    for value in values[1:]:
        total = lq_add(total, value)
    return total


def lq_cmp(a: LogQuantity, b: LogQuantity, tol: float = CMP_TOLERANCE) -> int:
    """Three-way comparison of log10 values, -1 / 0 / 1.

    The tolerance is relative to the exponent size once exponents exceed 1, since
    a 1e-9 absolute window is below double resolution at log10 ~ 1e29.
    """
    if a.unit != b.unit:
        raise UnitMismatchError(f"Cannot compare {a.unit.value} with {b.unit.value}")
    window = tol * max(1.0, abs(a.log10), abs(b.log10))
    diff = a.log10 - b.log10
    if diff > window:
        return 1
    if diff < -window:
        return -1
    return 0


def lq_max(values: Iterable[LogQuantity]) -> LogQuantity:
    values = list(values)
    if not values:
        raise MagnitudeDomainError("Maximum of no magnitudes is undefined")
    best = values[0]
    for value in values[1:]:
        if lq_cmp(value, best) > 0:
            best = value
    return best
