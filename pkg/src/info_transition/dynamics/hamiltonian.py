"""Hamiltonians and exact unitary propagation."""
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from functools import reduce
from typing import Any, Dict, Optional, Sequence, Tuple

import numpy as np

from ..hilbert.state import PureState, check_density_dim, embed_operator
from ..resources.constants import PhysicalConstants, UnitSystem, hbar_for
from ..utils.errors import CapacityExceededError, DimensionMismatchError, NonHermitianError

logger = logging.getLogger(__name__)

HERMITIAN_TOL = 1e-10
MAX_X_CHAIN_QUBITS = 12

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2.0)


class HamiltonianKind(Enum):
    DENSE = "dense"
    QUBIT_FLIP = "qubit_flip"
    X_CHAIN = "x_chain"
    FREE_PARTICLE = "free_particle"


def laplacian_matrix(n_points: int, dx: float) -> np.ndarray:
    """Central-difference second derivative with hard walls beyond both ends"""
    if n_points < 2 or dx <= 0:
        raise ValueError(f"Need at least 2 points and dx > 0, got {n_points}, {dx}")
    lap = -2.0 * np.eye(n_points) + np.eye(n_points, k=1) + np.eye(n_points, k=-1)
    return lap / dx ** 2


@dataclass
class HamiltonianSpec:
    """Description of a Hamiltonian; ``materialize`` builds the dense matrix in joules.

    ``params`` holds the kind-specific inputs: ``matrix`` for dense, ``E0``/``E1``
    for qubit_flip, ``omegas`` (rad/s) for x_chain and ``mass``/``n_points``/``dx``
    for free_particle.
    """

    kind: HamiltonianKind
    dims: Tuple[int, ...]
    params: Dict[str, Any] = field(default_factory=dict)
    units: UnitSystem = UnitSystem.SI
    constants: Optional[PhysicalConstants] = None

    @classmethod
    def dense(cls, matrix: np.ndarray, dims: Optional[Sequence[int]] = None, units: UnitSystem = UnitSystem.SI) -> "HamiltonianSpec":
        matrix = np.asarray(matrix, dtype=complex)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise DimensionMismatchError(f"Hamiltonian must be square, got shape {matrix.shape}")
        dims = tuple(dims) if dims is not None else (matrix.shape[0],)
        if math.prod(dims) != matrix.shape[0]:
            raise DimensionMismatchError(f"Dims {dims} do not match matrix size {matrix.shape[0]}")
        return cls(HamiltonianKind.DENSE, dims, {"matrix": matrix}, units)

    @classmethod
    def qubit_flip(cls, E0: float, E1: float, units: UnitSystem = UnitSystem.SI) -> "HamiltonianSpec":
        """Potential whose eigenstates are (|0> +- |1>)/sqrt2 with energies E0 and E1"""
        if E1 <= E0:
            raise ValueError(f"Need E1 > E0, got E0={E0}, E1={E1}")
        return cls(HamiltonianKind.QUBIT_FLIP, (2,), {"E0": float(E0), "E1": float(E1)}, units)

    @classmethod
    def x_chain(cls, omegas: Sequence[float], units: UnitSystem = UnitSystem.SI) -> "HamiltonianSpec":
        omegas = [float(w) for w in omegas]
        if not omegas:
            raise ValueError("x_chain needs at least one frequency")
        return cls(HamiltonianKind.X_CHAIN, (2,) * len(omegas), {"omegas": omegas}, units)

    @classmethod
    def free_particle(cls, mass: float, n_points: int, dx: float, units: UnitSystem = UnitSystem.SI) -> "HamiltonianSpec":
        if mass <= 0:
            raise ValueError(f"mass must be positive, got {mass}")
        return cls(HamiltonianKind.FREE_PARTICLE, (n_points,), {"mass": float(mass), "n_points": int(n_points), "dx": float(dx)}, units)

    @property
    def hbar(self) -> float:
        return hbar_for(self.units, self.constants)

    def mean_energy(self) -> float:
        self._require(HamiltonianKind.QUBIT_FLIP)
        return 0.5 * (self.params["E0"] + self.params["E1"])

    def energy_spread(self) -> float:
        self._require(HamiltonianKind.QUBIT_FLIP)
        return 0.5 * (self.params["E1"] - self.params["E0"])

    def _require(self, kind: HamiltonianKind):
        if self.kind != kind:
            raise ValueError(f"Operation needs a {kind.value} Hamiltonian, got {self.kind.value}")

    def materialize(self) -> np.ndarray:
        check_density_dim(math.prod(self.dims), f"Dense {self.kind.value} Hamiltonian")
        if self.kind == HamiltonianKind.DENSE:
            H = np.array(self.params["matrix"], dtype=complex)
        elif self.kind == HamiltonianKind.QUBIT_FLIP:
            H = self.mean_energy() * np.eye(2, dtype=complex) - self.energy_spread() * PAULI_X
        elif self.kind == HamiltonianKind.X_CHAIN:
            H = self._x_chain_matrix()
        else:
            mass, dx = self.params["mass"], self.params["dx"]
            H = -(self.hbar ** 2 / (2.0 * mass)) * laplacian_matrix(self.params["n_points"], dx).astype(complex)
        check_hermitian(H)
        return H

    def _x_chain_matrix(self) -> np.ndarray:
        omegas = self.params["omegas"]
        n = len(omegas)
        H = np.zeros((2 ** n, 2 ** n), dtype=complex)
        for j, omega in enumerate(omegas, start=1):
            xs = reduce(np.kron, [PAULI_X] * j)
            H += self.hbar * omega * embed_operator(xs, self.dims, list(range(j)))
        return H

    def to_dict(self) -> Dict[str, Any]:
        params = dict(self.params)
        if "matrix" in params:
            params["matrix"] = [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(params["matrix"])]
        return {"kind": self.kind.value, "dims": list(self.dims), "params": params, "units": self.units.value}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "HamiltonianSpec":
        kind = HamiltonianKind(data["kind"])
        units = UnitSystem(data.get("units", UnitSystem.SI.value))
        params = data.get("params", {})
        if kind == HamiltonianKind.DENSE:
            matrix = np.array([[complex(re, im) for re, im in row] for row in params["matrix"]])
            return cls.dense(matrix, data.get("dims"), units)
        if kind == HamiltonianKind.QUBIT_FLIP:
            return cls.qubit_flip(params["E0"], params["E1"], units)
        if kind == HamiltonianKind.X_CHAIN:
            return cls.x_chain(params["omegas"], units)
        return cls.free_particle(params["mass"], params["n_points"], params["dx"], units)


def check_hermitian(H: np.ndarray, tol: float = HERMITIAN_TOL) -> None:
    scale = float(np.max(np.abs(H), initial=0.0)) or 1.0
    if np.max(np.abs(H - H.conj().T), initial=0.0) > tol * scale:
        raise NonHermitianError("Hamiltonian is not Hermitian")


def flip_time(spec: HamiltonianSpec) -> float:
    """Time pi hbar / (2 dE) for the qubit-flip potential to take |0> to |1>"""
    return math.pi * spec.hbar / (2.0 * spec.energy_spread())


def propagator(H: HamiltonianSpec, t: float) -> np.ndarray:
    """exp(-i H t / hbar) through the spectral decomposition of H"""
    matrix = H.materialize()
    energies, vectors = np.linalg.eigh(matrix)
    phases = np.exp(-1j * energies * t / H.hbar)
    return (vectors * phases) @ vectors.conj().T


def evolve_unitary(state: PureState, H: HamiltonianSpec, t: float) -> PureState:
    if math.prod(H.dims) != state.dim:
        raise DimensionMismatchError(f"Hamiltonian dims {H.dims} do not match state dims {state.dims}")
    if t == 0:
        return state
    U = propagator(H, t)
    logger.debug(f"Unitary evolution ({H.kind.value}) over t={t:g}")
    return PureState.from_amplitudes(state.dims, U @ state.amps)


def x_chain_phases(omegas: Sequence[float], t: float) -> np.ndarray:
    """Coefficients of |0...0> evolved under sum_j omega_j X_1...X_j, in the X-product eigenbasis.

    Basis label k has bit j set when qubit j sits in |->; the string X_1...X_j
    then has eigenvalue 1 - 2 * parity(first j bits of k).
    """
    n = len(omegas)
    if n > MAX_X_CHAIN_QUBITS:
        raise CapacityExceededError(f"x_chain closed form is limited to {MAX_X_CHAIN_QUBITS} qubits, got {n}")
    if n == 0:
        raise ValueError("x_chain needs at least one frequency")
    k = np.arange(2 ** n)
    bits = (k[:, None] >> (n - 1 - np.arange(n))) & 1
    eigenvalues = 1 - 2 * (np.cumsum(bits, axis=1) % 2)
    phase = eigenvalues @ np.asarray(omegas, dtype=float)
    return np.exp(-1j * t * phase) / 2.0 ** (n / 2.0)


def x_chain_closed_form(omegas: Sequence[float], t: float) -> PureState:
    """Closed-form evolution of |0...0> under the X-string chain, returned in the computational basis"""
    n = len(omegas)
    coeffs = x_chain_phases(omegas, t).reshape((2,) * n)
    # |+>/|-> to |0>/|1> on every axis
    for axis in range(n):
        coeffs = np.moveaxis(np.tensordot(HADAMARD, coeffs, axes=([1], [axis])), 0, axis)
    return PureState.from_amplitudes((2,) * n, coeffs.reshape(-1))
