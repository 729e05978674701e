"""Finitely fine-grained Hilbert space: quantized amplitudes, product spaces, reduced operators."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from ..utils.config import get_settings
from ..utils.errors import CapacityExceededError, CompletenessViolationError, DimensionMismatchError

logger = logging.getLogger(__name__)

NORM_TOL = 1e-10
HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-10
QUANTIZE_MAX_PASSES = 8


def check_capacity(dims: Sequence[int], what: str = "Dense space") -> None:
    """Refuse state vectors beyond 2^max_state_qubits amplitudes before allocating them"""
    max_qubits = get_settings().max_state_qubits
    if sum(math.log2(d) for d in dims) > max_qubits + 1e-9:
        raise CapacityExceededError(f"{what} with dims {tuple(dims)} exceeds 2^{max_qubits} amplitudes")


def check_density_dim(size: int, what: str = "Dense operator") -> None:
    max_dim = get_settings().max_density_dim
    if size > max_dim:
        raise CapacityExceededError(f"{what} of dimension {size} exceeds {max_dim}")


def _check_dims(dims: Iterable[int]) -> Tuple[int, ...]:
    dims = tuple(int(d) for d in dims)
    if not dims or any(d < 1 for d in dims):
        raise DimensionMismatchError(f"Subsystem dimensions must be positive, got {dims}")
    check_capacity(dims)
    return dims


def _check_subsystems(indices: Iterable[int], n: int) -> Tuple[int, ...]:
    indices = tuple(sorted(set(int(i) for i in indices)))
    if not indices or indices[0] < 0 or indices[-1] >= n:
        raise DimensionMismatchError(f"Invalid subsystem indices {indices} for {n} subsystems")
    return indices


@dataclass(frozen=True)
class FineGraining:
    """Bits per complex amplitude; mu/2 bits per real component"""

    mu: int

    def __post_init__(self):
        if self.mu < 4 or self.mu % 2:
            raise ValueError(f"Fine-graining mu must be even and at least 4, got {self.mu}")

    @property
    def half(self) -> int:
        return self.mu // 2

    @property
    def step(self) -> float:
        return 2.0 ** (-self.half)

    @property
    def min_resolvable_angle(self) -> float:
        # The qubit example in the source text uses 2^-mu * pi instead; see DESIGN.md
        return 2.0 ** (-self.half)


@dataclass(frozen=True, eq=False)
class PureState:
    """Normalized amplitude vector over a tensor-product space.

    Basis order is mixed-radix over ``dims`` with the first subsystem most
    significant, which matches ``np.kron`` and C-order reshaping.
    """

    dims: Tuple[int, ...]
    amps: np.ndarray

    def __post_init__(self):
        dims = _check_dims(self.dims)
        amps = np.asarray(self.amps, dtype=complex).reshape(-1)
        if amps.size != math.prod(dims):
            raise DimensionMismatchError(
                f"Amplitude count {amps.size} does not match dims {dims}"
            )
        norm = float(np.linalg.norm(amps))
        if abs(norm * norm - 1.0) > NORM_TOL:
            raise ValueError(f"State is not normalized: |psi|^2 = {norm * norm:.12g}")
        amps = amps / norm
        amps.setflags(write=False)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "amps", amps)

    @classmethod
    def from_amplitudes(cls, dims: Sequence[int], amps: Sequence[complex]) -> PureState:
        """Build a state, normalizing the given amplitudes"""
        amps = np.asarray(amps, dtype=complex).reshape(-1)
        norm = float(np.linalg.norm(amps))
        if norm == 0.0:
            raise ValueError("Cannot normalize the zero vector")
        return cls(tuple(dims), amps / norm)

    @classmethod
    def basis(cls, dims: Sequence[int], index: int) -> PureState:
        dims = _check_dims(dims)
        amps = np.zeros(math.prod(dims), dtype=complex)
        amps[index] = 1.0
        return cls(dims, amps)

    @classmethod
    def product(cls, states: Sequence[PureState]) -> PureState:
        result = states[0]
        for state in states[1:]:
            result = tensor(result, state)
        return result

    @property
    def n(self) -> int:
        return len(self.dims)

    @property
    def dim(self) -> int:
        return self.amps.size

    def as_tensor(self) -> np.ndarray:
        return self.amps.reshape(self.dims)

    def overlap(self, other: PureState) -> complex:
        if self.dims != other.dims:
            raise DimensionMismatchError(f"Dims {self.dims} and {other.dims} differ")
        return complex(np.vdot(self.amps, other.amps))

    def density(self) -> DensityMatrix:
        check_density_dim(self.dim, "Density matrix")
        return DensityMatrix(self.dims, np.outer(self.amps, self.amps.conj()))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "dims": list(self.dims),
            "amps": [[float(a.real), float(a.imag)] for a in self.amps],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> PureState:
        amps = [complex(re, im) for re, im in data["amps"]]
        return cls.from_amplitudes(data["dims"], amps)


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    dims: Tuple[int, ...]
    mat: np.ndarray

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        mat = np.asarray(self.mat, dtype=complex)
        size = math.prod(dims)
        check_density_dim(size, "Density matrix")
        if mat.shape != (size, size):
            raise DimensionMismatchError(f"Matrix shape {mat.shape} does not match dims {dims}")
        if np.max(np.abs(mat - mat.conj().T), initial=0.0) > HERMITIAN_TOL:
            raise ValueError("Density matrix is not Hermitian")
        trace = complex(np.trace(mat))
        if abs(trace - 1.0) > TRACE_TOL:
            raise ValueError(f"Density matrix trace is {trace.real:.12g}, expected 1")
        mat = 0.5 * (mat + mat.conj().T)
        mat.setflags(write=False)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "mat", mat)

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.mat)

    def is_positive(self, tol: float = 1e-10) -> bool:
        return bool(self.eigenvalues().min() >= -tol)

    def purity(self) -> float:
        return float(np.real(np.trace(self.mat @ self.mat)))


@dataclass
class QuantizationReport:
    mu: int
    max_component_error: float
    norm_before_renormalization: float
    passes: int
    vanished: bool = False
    notes: List[str] = field(default_factory=list)


def _round_to_grid(values: np.ndarray, step: float) -> np.ndarray:
    """Round half away from zero onto multiples of ``step`` within [-1, 1]"""
    rounded = np.sign(values) * np.floor(np.abs(values) / step + 0.5) * step
    return np.clip(rounded, -1.0, 1.0)


def _quantize_components(amps: np.ndarray, step: float) -> np.ndarray:
    return _round_to_grid(amps.real, step) + 1j * _round_to_grid(amps.imag, step)


def quantize_with_report(state: PureState, g: FineGraining) -> Tuple[Optional[PureState], QuantizationReport]:
    """Round every real and imaginary component onto the mu/2-bit grid and renormalize.

    Renormalized grid vectors can drift off-grid, so rounding is repeated until
    the grid vector is a fixed point; that makes the operation idempotent. The
    reported component error is the one of the first rounding.
    """
    step = g.step
    grid = _quantize_components(state.amps, step)
    first_error = float(max(
        np.max(np.abs(grid.real - state.amps.real)),
        np.max(np.abs(grid.imag - state.amps.imag)),
    ))
    norm = float(np.linalg.norm(grid))
    report = QuantizationReport(
        mu=g.mu,
        max_component_error=first_error,
        norm_before_renormalization=norm,
        passes=1,
    )
    if norm == 0.0:
        report.vanished = True
        report.notes.append("every amplitude rounded to zero")
        logger.warning(f"Quantization at mu={g.mu} annihilated a state over dims {state.dims}")
        return None, report

    for _ in range(QUANTIZE_MAX_PASSES):
        regrid = _quantize_components(grid / np.linalg.norm(grid), step)
        if np.array_equal(regrid, grid) or not np.any(regrid):
            break
        grid = regrid
        report.passes += 1
    else:
        report.notes.append(f"grid fixed point not reached in {QUANTIZE_MAX_PASSES} passes")

    return PureState.from_amplitudes(state.dims, grid), report


def quantize(state: PureState, g: FineGraining) -> PureState:
    quantized, report = quantize_with_report(state, g)
    if quantized is None:
        raise CompletenessViolationError(
            f"All amplitudes of a {state.dim}-dimensional state vanish at mu={g.mu}"
        )
    return quantized


def fubini_study_angle(a: PureState, b: PureState) -> float:
    overlap = abs(a.overlap(b))
    return float(math.acos(min(1.0, max(0.0, overlap))))


def tensor(a: PureState, b: PureState) -> PureState:
    return PureState(a.dims + b.dims, np.kron(a.amps, b.amps))


def partial_trace(rho: DensityMatrix, keep: Iterable[int]) -> DensityMatrix:
    """Reduced operator over the kept subsystems (ascending index order)"""
    n = len(rho.dims)
    keep = _check_subsystems(keep, n)
    if len(keep) == n:
        return rho
    t = rho.mat.reshape(rho.dims + rho.dims)
    row = list(range(n))
    col = [n + i if i in keep else i for i in range(n)]
    out = list(keep) + [n + i for i in keep]
    reduced = np.einsum(t, row + col, out)
    kept_dims = tuple(rho.dims[i] for i in keep)
    size = math.prod(kept_dims)
    return DensityMatrix(kept_dims, reduced.reshape(size, size))


def bipartition_matrix(state: PureState, cut: Iterable[int]) -> np.ndarray:
    """Amplitudes as a (dim(cut) x dim(rest)) matrix for Schmidt analysis"""
    cut = _check_subsystems(cut, state.n)
    rest = [i for i in range(state.n) if i not in cut]
    t = np.transpose(state.as_tensor(), list(cut) + rest)
    rows = math.prod(state.dims[i] for i in cut)
    return t.reshape(rows, -1)


def reduced_density(state: PureState, keep: Iterable[int]) -> DensityMatrix:
    """Partial trace of |psi><psi| without forming the full operator"""
    keep = _check_subsystems(keep, state.n)
    m = bipartition_matrix(state, keep)
    return DensityMatrix(tuple(state.dims[i] for i in keep), m @ m.conj().T)


def embed_operator(op: np.ndarray, dims: Sequence[int], targets: Sequence[int]) -> np.ndarray:
    """Lift an operator acting on ``targets`` (in the given order) to the full space"""
    dims = tuple(dims)
    n = len(dims)
    targets = list(targets)
    if sorted(set(targets)) != sorted(targets) or any(t < 0 or t >= n for t in targets):
        raise DimensionMismatchError(f"Invalid target subsystems {targets}")
    tdims = [dims[t] for t in targets]
    tsize = math.prod(tdims)
    if op.shape != (tsize, tsize):
        raise DimensionMismatchError(f"Operator shape {op.shape} does not match targets {targets}")
    size = math.prod(dims)
    full = np.eye(size, dtype=complex).reshape(dims + dims)
    op_t = op.reshape(tdims + tdims)
    # contract the row indices of the identity on target axes with the operator
    out = list(range(2 * n))
    in_full = list(range(2 * n))
    new_axes = list(range(2 * n, 2 * n + len(targets)))
    for k, t in enumerate(targets):
        in_full[t] = new_axes[k]
    op_axes = [targets[k] for k in range(len(targets))] + new_axes
    result = np.einsum(op_t, op_axes, full, in_full, out)
    return result.reshape(size, size)


def apply_local(state: PureState, op: np.ndarray, targets: Sequence[int]) -> PureState:
    """Apply an operator on a subset of subsystems, renormalizing the result"""
    targets = list(targets)
    tdims = [state.dims[t] for t in targets]
    tsize = math.prod(tdims)
    if op.shape != (tsize, tsize):
        raise DimensionMismatchError(f"Operator shape {op.shape} does not match targets {targets}")
    n = state.n
    new_axes = list(range(n, n + len(targets)))
    in_state = list(range(n))
    for k, t in enumerate(targets):
        in_state[t] = new_axes[k]
    out = np.einsum(op.reshape(tdims + tdims), targets + new_axes, state.as_tensor(), in_state, list(range(n)))
    return PureState.from_amplitudes(state.dims, out.reshape(-1))
