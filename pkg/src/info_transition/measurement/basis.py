"""Product transition bases and the ensembles they induce."""
import itertools
import logging
import math
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..hilbert.analyzer import DEFAULT_SEPARABILITY_TOL, FactorizationStructure, factorize
from ..hilbert.state import DensityMatrix, PureState
from ..magnitude.quantity import LogQuantity, Unit, lq_from_linear, lq_max, lq_sum
from ..utils.errors import DimensionMismatchError, NonProductBasisError

logger = logging.getLogger(__name__)

COMPUTATIONAL_BASIS_ID = "computational"
UNITARY_TOL = 1e-10
WEIGHT_CUTOFF = 1e-15
WEIGHT_SUM_TOL = 1e-12


@dataclass
class TransitionBasis:
    """A product basis, possibly leaving some factors unprojected.

    ``factors`` holds one unitary per subsystem whose columns are that factor's
    basis vectors, or None for a factor the transition does not touch. With
    ``vectors`` set instead, the basis is given as full-space columns, each of
    which must be a product state. Neither set means the computational basis.
    """

    basis_id: str
    factors: Optional[List[Optional[np.ndarray]]] = None
    vectors: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.factors is not None and self.vectors is not None:
            raise ValueError("A basis is given either by factors or by vectors, not both")
        if self.factors is not None:
            self.factors = [None if f is None else np.asarray(f, dtype=complex) for f in self.factors]
        if self.vectors is not None:
            self.vectors = np.asarray(self.vectors, dtype=complex)

    @classmethod
    def computational(cls) -> "TransitionBasis":
        return cls(COMPUTATIONAL_BASIS_ID)

    @property
    def is_computational(self) -> bool:
        return self.factors is None and self.vectors is None

    def factor_unitaries(self, dims: Sequence[int]) -> List[Optional[np.ndarray]]:
        """Per-factor unitaries resolved against ``dims``, checked for shape and unitarity"""
        if self.vectors is not None:
            raise ValueError(f"Basis {self.basis_id} is given by full-space vectors")
        if self.is_computational:
            return [np.eye(d, dtype=complex) for d in dims]
        if len(self.factors) != len(dims):
            raise DimensionMismatchError(
                f"Basis {self.basis_id} has {len(self.factors)} factors for {len(dims)} subsystems"
            )
        for k, (U, d) in enumerate(zip(self.factors, dims)):
            if U is None:
                continue
            if U.shape != (d, d):
                raise DimensionMismatchError(f"Factor {k} of basis {self.basis_id} has shape {U.shape}, expected {(d, d)}")
            if np.max(np.abs(U.conj().T @ U - np.eye(d))) > UNITARY_TOL:
                raise ValueError(f"Factor {k} of basis {self.basis_id} is not unitary")
        return list(self.factors)

    def is_complete(self, dims: Sequence[int]) -> bool:
        if self.vectors is not None or self.is_computational:
            return True
        return all(U is not None for U in self.factor_unitaries(dims))

    def vector_factorizations(self, dims: Sequence[int], tol: float = DEFAULT_SEPARABILITY_TOL) -> List[FactorizationStructure]:
        """Validate a vectors basis: orthonormal columns spanning the space, each a product state"""
        dims = tuple(dims)
        size = math.prod(dims)
        V = self.vectors
        if V.shape != (size, size):
            raise DimensionMismatchError(f"Basis {self.basis_id} has shape {V.shape}, expected {(size, size)}")
        if np.max(np.abs(V.conj().T @ V - np.eye(size))) > UNITARY_TOL:
            raise ValueError(f"Basis {self.basis_id} is not orthonormal")
        structures = []
        for k in range(size):
            structure = factorize(PureState(dims, V[:, k]), tol)
            if not structure.is_fully_separable():
                raise NonProductBasisError(f"Basis {self.basis_id} column {k} is entangled across {structure.blocks}")
            structures.append(structure)
        return structures

    def to_dict(self) -> Dict[str, Any]:
        def encode(U):
            return None if U is None else [[[float(z.real), float(z.imag)] for z in row] for row in U]

        data: Dict[str, Any] = {"basis_id": self.basis_id}
        if self.factors is not None:
            data["factors"] = [encode(U) for U in self.factors]
        if self.vectors is not None:
            data["vectors"] = encode(self.vectors)
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "TransitionBasis":
        def decode(rows):
            return None if rows is None else np.array([[complex(re, im) for re, im in row] for row in rows])

        factors = data.get("factors")
        vectors = data.get("vectors")
        return cls(
            data["basis_id"],
            factors=None if factors is None else [decode(U) for U in factors],
            vectors=decode(vectors),
        )


@dataclass
class EnsembleMember:
    weight: float
    state: PureState
    factorization: FactorizationStructure
    outcome_index: int = 0

    def state_information(self, mu: int) -> LogQuantity:
        """mu times the summed dimension of the member's irreducible blocks"""
        return lq_from_linear(mu * self.factorization.cost_units(), Unit.BITS)


@dataclass
class Ensemble:
    members: List[EnsembleMember]
    proper: bool
    basis_id: Optional[str] = None

    def __post_init__(self):
        if not self.members:
            raise ValueError("An ensemble needs at least one member")
        total = sum(m.weight for m in self.members)
        if abs(total - 1.0) > WEIGHT_SUM_TOL:
            raise ValueError(f"Ensemble weights sum to {total:.15g}")

    @property
    def weights(self) -> np.ndarray:
        return np.array([m.weight for m in self.members])

    @property
    def dims(self) -> Tuple[int, ...]:
        return self.members[0].state.dims

    def density(self) -> DensityMatrix:
        size = self.members[0].state.dim
        mat = np.zeros((size, size), dtype=complex)
        for m in self.members:
            mat += m.weight * np.outer(m.state.amps, m.state.amps.conj())
        return DensityMatrix(self.dims, mat / np.real(np.trace(mat)))

    def is_mnemonically_minimal(self) -> bool:
        """Every member is fully separable"""
        return all(m.factorization.is_fully_separable() for m in self.members)

    def member(self, outcome_index: int) -> EnsembleMember:
        for m in self.members:
            if m.outcome_index == outcome_index:
                return m
        raise KeyError(outcome_index)


def ensemble_state_information(ensemble: Ensemble, mu: int) -> LogQuantity:
    """Memory that must be available whichever member is realised: the maximum over members"""
    return lq_max(m.state_information(mu) for m in ensemble.members)


def ensemble_diagnostics(ensemble: Ensemble, mu: int) -> Dict[str, Any]:
    expectation = lq_sum(m.state_information(mu).scaled(m.weight) for m in ensemble.members if m.weight > 0)
    return {
        "max": ensemble_state_information(ensemble, mu).to_dict(),
        "expectation": expectation.to_dict(),
        "n_members": len(ensemble.members),
        "proper": ensemble.proper,
        "mnemonically_minimal": ensemble.is_mnemonically_minimal(),
    }


def pure_ensemble(state: PureState, tol: float = DEFAULT_SEPARABILITY_TOL) -> Ensemble:
    """A single pure state viewed as an ensemble; it is not a proper mixture of anything"""
    return Ensemble([EnsembleMember(1.0, state, factorize(state, tol))], proper=False)


def _singleton_structure(columns: Sequence[np.ndarray]) -> FactorizationStructure:
    factors = tuple(PureState((c.size,), c) for c in columns)
    return FactorizationStructure(
        tuple((i,) for i in range(len(columns))),
        tuple(c.size for c in columns),
        factors,
    )


def _to_basis_coordinates(tensor: np.ndarray, unitaries: Sequence[Optional[np.ndarray]]) -> np.ndarray:
    for axis, U in enumerate(unitaries):
        if U is not None:
            tensor = np.moveaxis(np.tensordot(U.conj().T, tensor, axes=([1], [axis])), 0, axis)
    return tensor


def _from_basis_coordinates(tensor: np.ndarray, unitaries: Sequence[Optional[np.ndarray]]) -> np.ndarray:
    for axis, U in enumerate(unitaries):
        if U is not None:
            tensor = np.moveaxis(np.tensordot(U, tensor, axes=([1], [axis])), 0, axis)
    return tensor


def _finish(members: List[EnsembleMember], basis: TransitionBasis) -> Ensemble:
    total = sum(m.weight for m in members)
    for m in members:
        m.weight /= total
    return Ensemble(members, proper=True, basis_id=basis.basis_id)


def project_onto_basis(
    state: PureState, basis: TransitionBasis, tol: float = DEFAULT_SEPARABILITY_TOL
) -> Ensemble:
    """Ensemble of renormalized projections of ``state`` onto the basis members.

    Outcome indices enumerate the projected factors in mixed radix, first
    projected factor most significant. Members with vanishing weight are left out.
    """
    dims = state.dims
    members: List[EnsembleMember] = []

    if basis.vectors is not None:
        structures = basis.vector_factorizations(dims, tol)
        coeffs = basis.vectors.conj().T @ state.amps
        for k, c in enumerate(coeffs):
            weight = float(abs(c) ** 2)
            if weight > WEIGHT_CUTOFF:
                member_state = PureState.from_amplitudes(dims, basis.vectors[:, k])
                members.append(EnsembleMember(weight, member_state, structures[k], k))
        return _finish(members, basis)

    unitaries = basis.factor_unitaries(dims)
    projected = [k for k, U in enumerate(unitaries) if U is not None]
    if not projected:
        raise ValueError(f"Basis {basis.basis_id} projects no factor")
    coeffs = _to_basis_coordinates(state.as_tensor(), unitaries)

    if len(projected) == len(dims):
        flat = coeffs.reshape(-1)
        for k in np.nonzero(np.abs(flat) ** 2 > WEIGHT_CUTOFF)[0]:
            labels = np.unravel_index(int(k), dims)
            columns = [unitaries[a][:, labels[a]] for a in range(len(dims))]
            structure = _singleton_structure(columns)
            member_state = PureState.product(list(structure.factors))
            members.append(EnsembleMember(float(abs(flat[k]) ** 2), member_state, structure, int(k)))
        return _finish(members, basis)

    projected_dims = [dims[k] for k in projected]
    for index, labels in enumerate(itertools.product(*(range(d) for d in projected_dims))):
        selector = [slice(None)] * len(dims)
        for axis, label in zip(projected, labels):
            selector[axis] = slice(label, label + 1)
        part = np.zeros_like(coeffs)
        part[tuple(selector)] = coeffs[tuple(selector)]
        weight = float(np.sum(np.abs(part) ** 2))
        if weight <= WEIGHT_CUTOFF:
            continue
        amps = _from_basis_coordinates(part, unitaries).reshape(-1)
        member_state = PureState.from_amplitudes(dims, amps)
        members.append(EnsembleMember(weight, member_state, factorize(member_state, tol), index))
    return _finish(members, basis)


def projected_density(state: PureState, basis: TransitionBasis) -> DensityMatrix:
    """sum_k P_k |psi><psi| P_k over all projectors of the basis, zero-weight ones included"""
    rho = np.outer(state.amps, state.amps.conj())
    dims = state.dims
    n = len(dims)
    if basis.vectors is not None:
        basis.vector_factorizations(dims)
        V = basis.vectors
        weights = np.abs(V.conj().T @ state.amps) ** 2
        mat = (V * weights) @ V.conj().T
        return DensityMatrix(dims, mat)
    unitaries = basis.factor_unitaries(dims)
    # in basis coordinates the projections zero every off-diagonal entry of a projected factor
    t = rho.reshape(dims + dims)
    t = _to_basis_coordinates(t, unitaries)
    t = _to_basis_coordinates(t.conj(), [None] * n + list(unitaries)).conj()
    for k, U in enumerate(unitaries):
        if U is None:
            continue
        keep = np.eye(dims[k], dtype=bool)
        shape = [1] * (2 * n)
        shape[k] = shape[n + k] = dims[k]
        t = t * keep.reshape(shape)
    t = _from_basis_coordinates(t, unitaries)
    t = _from_basis_coordinates(t.conj(), [None] * n + list(unitaries)).conj()
    size = math.prod(dims)
    return DensityMatrix(dims, t.reshape(size, size))
