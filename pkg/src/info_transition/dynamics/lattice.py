"""Position-space density matrices on a 1-D hard-wall lattice: scattering decoherence and free spreading."""
import logging
import math
from dataclasses import dataclass
from typing import Any, Dict, Iterator, Optional, Tuple

import numpy as np

from ..hilbert.state import DensityMatrix
from ..resources.constants import PhysicalConstants, UnitSystem, hbar_for
from ..utils.errors import DimensionMismatchError, NumericalWatchdogError, StepBoundError
from .hamiltonian import HamiltonianSpec, laplacian_matrix
from .lindblad import LindbladSpec, TRACE_WATCHDOG, step_count

logger = logging.getLogger(__name__)

MAX_LATTICE_POINTS = 64
LATTICE_TRACE_TOL = 1e-8
# RK4 stays stable for |lambda h| up to about 2.8 on both axes
STEP_BOUND = 2.5


@dataclass(frozen=True, eq=False)
class LatticeState:
    """rho(x, x') sampled on ``positions``; normalized so that sum(diag) * dx = 1"""

    positions: np.ndarray
    rho: np.ndarray

    def __post_init__(self):
        positions = np.asarray(self.positions, dtype=float)
        rho = np.asarray(self.rho, dtype=complex)
        n = positions.size
        if n < 2:
            raise DimensionMismatchError("A lattice needs at least two points")
        if rho.shape != (n, n):
            raise DimensionMismatchError(f"rho shape {rho.shape} does not match {n} lattice points")
        spacing = np.diff(positions)
        if not np.allclose(spacing, spacing[0], rtol=1e-9, atol=0.0) or spacing[0] <= 0:
            raise ValueError("Lattice positions must be evenly spaced and increasing")
        scale = float(np.max(np.abs(rho), initial=0.0)) or 1.0
        if np.max(np.abs(rho - rho.conj().T)) > 1e-10 * scale:
            raise ValueError("Lattice density matrix is not Hermitian")
        trace = float(np.real(np.trace(rho))) * spacing[0]
        if abs(trace - 1.0) > LATTICE_TRACE_TOL:
            raise ValueError(f"Lattice trace is {trace:.12g}, expected 1")
        rho = 0.5 * (rho + rho.conj().T)
        positions.setflags(write=False)
        rho.setflags(write=False)
        object.__setattr__(self, "positions", positions)
        object.__setattr__(self, "rho", rho)

    @classmethod
    def grid(cls, n_points: int, dx: float) -> np.ndarray:
        """Positions centred on zero"""
        if n_points > MAX_LATTICE_POINTS:
            logger.warning(f"Lattice of {n_points} points exceeds the usual {MAX_LATTICE_POINTS}")
        return (np.arange(n_points) - 0.5 * (n_points - 1)) * dx

    @classmethod
    def from_wavefunction(cls, positions: np.ndarray, psi: np.ndarray) -> "LatticeState":
        positions = np.asarray(positions, dtype=float)
        dx = positions[1] - positions[0]
        psi = np.asarray(psi, dtype=complex)
        psi = psi / math.sqrt(float(np.sum(np.abs(psi) ** 2)) * dx)
        return cls(positions, np.outer(psi, psi.conj()))

    @classmethod
    def gaussian(
        cls, n_points: int, dx: float, sigma: float, center: float = 0.0, wavenumber: float = 0.0
    ) -> "LatticeState":
        """Pure Gaussian packet whose probability density has standard deviation sigma"""
        x = cls.grid(n_points, dx)
        psi = np.exp(-((x - center) ** 2) / (4.0 * sigma ** 2) + 1j * wavenumber * x)
        return cls.from_wavefunction(x, psi)

    @classmethod
    def from_density(cls, positions: np.ndarray, rho: DensityMatrix) -> "LatticeState":
        positions = np.asarray(positions, dtype=float)
        return cls(positions, rho.mat / (positions[1] - positions[0]))

    @property
    def n_points(self) -> int:
        return self.positions.size

    @property
    def dx(self) -> float:
        return float(self.positions[1] - self.positions[0])

    def trace(self) -> float:
        return float(np.real(np.trace(self.rho))) * self.dx

    def probabilities(self) -> np.ndarray:
        return np.real(np.diag(self.rho)) * self.dx

    def width(self) -> float:
        """Standard deviation of the position distribution"""
        p = self.probabilities()
        mean = float(np.sum(p * self.positions))
        return math.sqrt(max(0.0, float(np.sum(p * self.positions ** 2)) - mean ** 2))

    def to_density(self) -> DensityMatrix:
        mat = self.rho * self.dx
        return DensityMatrix((self.n_points,), mat / np.real(np.trace(mat)))

    def separation_matrix(self) -> np.ndarray:
        """(x - x')^2 for every pair of lattice points"""
        diff = self.positions[:, None] - self.positions[None, :]
        return diff * diff

    def iter_rows(self) -> Iterator[Tuple[float, float, float, float]]:
        for i, x in enumerate(self.positions):
            for j, xp in enumerate(self.positions):
                z = self.rho[i, j]
                yield float(x), float(xp), float(z.real), float(z.imag)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "n_points": self.n_points,
            "dx": self.dx,
            "trace": self.trace(),
            "width": self.width(),
            "coherence_length": coherence_length(self),
        }


def coherence_length(state: LatticeState) -> float:
    """Offset |x - x'| at which the summed coherence profile falls to 1/e of its diagonal value"""
    n = state.n_points
    magnitude = np.abs(state.rho)
    profile = np.array([np.sum(np.diagonal(magnitude, offset=s)) for s in range(n)])
    if profile[0] <= 0:
        return 0.0
    ratio = profile / profile[0]
    below = np.nonzero(ratio < math.exp(-1.0))[0]
    if below.size == 0:
        return (n - 1) * state.dx
    s = int(below[0])
    # linear interpolation between offsets s-1 and s
    r0, r1 = ratio[s - 1], ratio[s]
    frac = (r0 - math.exp(-1.0)) / (r0 - r1)
    return (s - 1 + frac) * state.dx


def scattering_damping(state: LatticeState, Lambda: float, t: float) -> LatticeState:
    """Multiply rho(x, x') by exp(-Lambda t (x - x')^2)"""
    if Lambda < 0 or t < 0:
        raise ValueError("Lambda and t must be non-negative")
    factor = np.exp(-Lambda * t * state.separation_matrix())
    return LatticeState(state.positions, state.rho * factor)


def max_stable_step(state: LatticeState, mass: float, Lambda: float, hbar: float) -> float:
    kinetic = 0.0 if math.isinf(mass) else 2.0 * hbar / (mass * state.dx ** 2)
    span = state.positions[-1] - state.positions[0]
    rate = kinetic + Lambda * span ** 2
    return math.inf if rate == 0 else STEP_BOUND / rate


def decohered_free_evolution(
    state: LatticeState,
    mass: float,
    Lambda: float,
    t: float,
    dt: float,
    units: UnitSystem = UnitSystem.SI,
    constants: Optional[PhysicalConstants] = None,
) -> LatticeState:
    """RK4 integration of free spreading combined with scattering decoherence.

    d rho / dt = (i hbar / 2m)(Lap rho - rho Lap) - Lambda (x - x')^2 rho, with a
    hard-wall central-difference Laplacian. ``mass=math.inf`` switches the
    kinetic term off.
    """
    if mass <= 0 or Lambda < 0:
        raise ValueError("mass must be positive and Lambda non-negative")
    hbar = hbar_for(units, constants)
    steps = step_count(t, dt)
    if steps == 0:
        return state
    h = t / steps
    bound = max_stable_step(state, mass, Lambda, hbar)
    if h > bound:
        raise StepBoundError(f"Step {h:g} exceeds the stability bound {bound:g}")

    kinetic = 0.0 if math.isinf(mass) else 1j * hbar / (2.0 * mass)
    lap = laplacian_matrix(state.n_points, state.dx)
    damping = Lambda * state.separation_matrix()

    def rhs(rho: np.ndarray) -> np.ndarray:
        out = -damping * rho
        if kinetic:
            out += kinetic * (lap @ rho - rho @ lap)
        return out

    rho = np.array(state.rho, dtype=complex)
    trace0 = state.trace()
    for step in range(1, steps + 1):
        k1 = rhs(rho)
        k2 = rhs(rho + 0.5 * h * k1)
        k3 = rhs(rho + 0.5 * h * k2)
        k4 = rhs(rho + h * k3)
        rho = rho + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        rho = 0.5 * (rho + rho.conj().T)
        drift = abs(float(np.real(np.trace(rho))) * state.dx - trace0)
        if drift > TRACE_WATCHDOG:
            raise NumericalWatchdogError(f"Lattice trace drifted by {drift:.3e} at step {step}")
    logger.debug(f"Lattice evolution: {steps} steps of {h:g} on {state.n_points} points")
    return LatticeState(state.positions, rho)


def lindblad_position_generator(
    Lambda: float,
    mass: float,
    n_points: int,
    dx: float,
    units: UnitSystem = UnitSystem.SI,
    constants: Optional[PhysicalConstants] = None,
) -> LindbladSpec:
    """Free-particle generator with the single collapse operator sqrt(2 Lambda hbar) x"""
    if Lambda < 0:
        raise ValueError(f"Lambda must be non-negative, got {Lambda}")
    H0 = HamiltonianSpec.free_particle(mass, n_points, dx, units)
    H0.constants = constants
    x = LatticeState.grid(n_points, dx)
    L = math.sqrt(2.0 * Lambda * H0.hbar) * np.diag(x).astype(complex)
    return LindbladSpec(H0, [L] if Lambda > 0 else [])
