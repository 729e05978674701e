"""Fixed-step RK4 integration of the Lindblad master equation."""
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence

import numpy as np

from ..hilbert.state import DensityMatrix
from ..utils.errors import DimensionMismatchError, NumericalWatchdogError
from .hamiltonian import HamiltonianSpec

logger = logging.getLogger(__name__)

TRACE_WATCHDOG = 1e-6

StepObserver = Callable[[int, float, np.ndarray], None]


@dataclass
class LindbladSpec:
    """Generator H0 plus collapse operators L_k, all in the units of H0"""

    H0: HamiltonianSpec
    collapse_ops: List[np.ndarray] = field(default_factory=list)

    def __post_init__(self):
        size = math.prod(self.H0.dims)
        ops = []
        for k, op in enumerate(self.collapse_ops):
            op = np.asarray(op, dtype=complex)
            if op.shape != (size, size):
                raise DimensionMismatchError(f"Collapse operator {k} has shape {op.shape}, expected {(size, size)}")
            ops.append(op)
        self.collapse_ops = ops

    @property
    def hbar(self) -> float:
        return self.H0.hbar

    @property
    def dim(self) -> int:
        return math.prod(self.H0.dims)


def dissipator(L: np.ndarray, rho: np.ndarray) -> np.ndarray:
    """L^dag L rho + rho L^dag L - 2 L rho L^dag"""
    Ld = L.conj().T
    LdL = Ld @ L
    return LdL @ rho + rho @ LdL - 2.0 * (L @ rho @ Ld)


def lindblad_rhs(H: np.ndarray, ops: Sequence[np.ndarray], rho: np.ndarray, hbar: float) -> np.ndarray:
    drho = (-1j / hbar) * (H @ rho - rho @ H)
    for L in ops:
        drho -= dissipator(L, rho) / (2.0 * hbar)
    return drho


def _rk4_step(H: np.ndarray, ops: Sequence[np.ndarray], rho: np.ndarray, dt: float, hbar: float) -> np.ndarray:
    k1 = lindblad_rhs(H, ops, rho, hbar)
    k2 = lindblad_rhs(H, ops, rho + 0.5 * dt * k1, hbar)
    k3 = lindblad_rhs(H, ops, rho + 0.5 * dt * k2, hbar)
    k4 = lindblad_rhs(H, ops, rho + dt * k3, hbar)
    return rho + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def step_count(t: float, dt: float) -> int:
    if dt <= 0 or t < 0:
        raise ValueError(f"Need dt > 0 and t >= 0, got t={t}, dt={dt}")
    if dt > t and t > 0:
        raise ValueError(f"Step {dt} exceeds the integration time {t}")
    return max(0, math.ceil(t / dt - 1e-9))


def lindblad_evolve(
    rho: DensityMatrix,
    spec: LindbladSpec,
    t: float,
    dt: float,
    observer: Optional[StepObserver] = None,
) -> DensityMatrix:
    """Integrate the master equation for time t with steps no longer than dt.

    The state is symmetrized after every step. A step whose trace departs from
    the initial trace by more than the watchdog bound aborts the run.
    """
    if rho.dim != spec.dim:
        raise DimensionMismatchError(f"Density matrix size {rho.dim} does not match generator size {spec.dim}")
    steps = step_count(t, dt)
    if steps == 0:
        return rho
    h = t / steps
    H = spec.H0.materialize()
    hbar = spec.hbar
    mat = np.array(rho.mat, dtype=complex)
    trace0 = float(np.real(np.trace(mat)))
    for step in range(1, steps + 1):
        mat = _rk4_step(H, spec.collapse_ops, mat, h, hbar)
        mat = 0.5 * (mat + mat.conj().T)
        drift = abs(float(np.real(np.trace(mat))) - trace0)
        if drift > TRACE_WATCHDOG:
            logger.error(f"Trace drift {drift:.3e} at step {step}/{steps}")
            raise NumericalWatchdogError(f"Trace drifted by {drift:.3e} at t={step * h:g}")
        if observer is not None:
            observer(step, step * h, mat)
    logger.debug(f"Lindblad integration: {steps} steps of {h:g}, final drift {drift:.2e}")
    return DensityMatrix(rho.dims, mat)


def purify(rho: DensityMatrix) -> np.ndarray:
    """A vector on system (x) ancilla whose system marginal is rho"""
    eigenvalues, vectors = np.linalg.eigh(rho.mat)
    eigenvalues = np.clip(eigenvalues, 0.0, None)
    d = rho.dim
    psi = np.zeros(d * d, dtype=complex)
    for k in range(d):
        ancilla = np.zeros(d)
        ancilla[k] = 1.0
        psi += math.sqrt(eigenvalues[k]) * np.kron(vectors[:, k], ancilla)
    return psi
