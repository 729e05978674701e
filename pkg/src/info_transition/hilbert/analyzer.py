import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .state import DensityMatrix, PureState, bipartition_matrix, _check_subsystems

logger = logging.getLogger(__name__)

DEFAULT_SEPARABILITY_TOL = 1e-10


def schmidt_coefficients(state: PureState, cut: Iterable[int]) -> np.ndarray:
    """Singular values of the amplitude matrix across ``cut`` | rest, descending"""
    return np.linalg.svd(bipartition_matrix(state, cut), compute_uv=False)


def _entropy_bits(weights: np.ndarray) -> float:
    weights = weights[weights > 1e-300]
    return float(max(0.0, -np.sum(weights * np.log2(weights))))


def entanglement_entropy(state: PureState, cut: Iterable[int]) -> float:
    """Von Neumann entropy in bits of either reduced operator across the cut"""
    cut = _check_subsystems(cut, state.n)
    if len(cut) == state.n:
        return 0.0
    s = schmidt_coefficients(state, cut)
    return _entropy_bits(s * s)


def von_neumann_entropy(rho: DensityMatrix) -> float:
    eigenvalues = np.clip(rho.eigenvalues(), 0.0, None)
    return _entropy_bits(eigenvalues)


def shannon_state_information(D: int, mu: int) -> int:
    """Bits needed to record D probabilities at mu bits each, one being implied"""
    if D < 1 or mu < 2:
        raise ValueError(f"Need D >= 1 and mu >= 2, got D={D}, mu={mu}")
    return (D - 1) * mu


@dataclass(frozen=True)
class FactorizationStructure:
    """Partition of subsystems into irreducible tensor factors of a pure state"""

    blocks: Tuple[Tuple[int, ...], ...]
    block_dims: Tuple[int, ...]
    factors: Tuple[PureState, ...] = field(default=(), compare=False, repr=False)

    @property
    def n_blocks(self) -> int:
        return len(self.blocks)

    @property
    def largest_block(self) -> Tuple[int, ...]:
        """Block with the largest dimension; ties go to the lowest subsystem index"""
        k = max(range(len(self.blocks)), key=lambda i: (self.block_dims[i], -self.blocks[i][0]))
        return self.blocks[k]

    @property
    def largest_block_dim(self) -> int:
        return max(self.block_dims)

    def cost_units(self) -> int:
        """Sum over blocks of the block dimension; state information is mu times this"""
        return int(sum(self.block_dims))

    def is_fully_separable(self) -> bool:
        return all(len(block) == 1 for block in self.blocks)

    def block_of(self, subsystem: int) -> Tuple[int, ...]:
        for block in self.blocks:
            if subsystem in block:
                return block
        raise KeyError(subsystem)

    def product_state(self) -> PureState:
        """Rebuild the full state from the block factors (original subsystem order)"""
        if not self.factors:
            raise ValueError("Factorization was computed without factor states")
        order = [i for block in self.blocks for i in block]
        combined = PureState.product(list(self.factors))
        dims = tuple(d for factor in self.factors for d in factor.dims)
        t = combined.amps.reshape(dims)
        t = np.transpose(t, np.argsort(order))
        full_dims = tuple(dims[k] for k in np.argsort(order))
        return PureState(full_dims, t.reshape(-1))


def _split(state: PureState, tol: float) -> Optional[Tuple[Tuple[int, ...], PureState, PureState]]:
    """Smallest subsystem subset carrying a rank-one Schmidt cut, with its two factors"""
    n = state.n
    for size in range(1, n // 2 + 1):
        for subset in itertools.combinations(range(n), size):
            if size * 2 == n and 0 not in subset:
                continue
            m = bipartition_matrix(state, subset)
            u, s, vh = np.linalg.svd(m, full_matrices=False)
            if len(s) < 2 or s[1] < tol:
                rest = tuple(i for i in range(n) if i not in subset)
                left = PureState.from_amplitudes(tuple(state.dims[i] for i in subset), u[:, 0])
                right = PureState.from_amplitudes(tuple(state.dims[i] for i in rest), s[0] * vh[0, :])
                return subset, left, right
    return None


def factorize(state: PureState, tol: float = DEFAULT_SEPARABILITY_TOL) -> FactorizationStructure:
    """Finest product partition, by repeatedly splitting off the smallest rank-one cut.

    Any rank-one cut is a union of finest blocks, so the smallest one found is
    itself a finest block.
    """
    pending: List[Tuple[Tuple[int, ...], PureState]] = [(tuple(range(state.n)), state)]
    done: List[Tuple[Tuple[int, ...], PureState]] = []
    while pending:
        labels, part = pending.pop()
        if part.n == 1:
            done.append((labels, part))
            continue
        found = _split(part, tol)
        if found is None:
            done.append((labels, part))
            continue
        subset, left, right = found
        rest = [i for i in range(part.n) if i not in subset]
        pending.append((tuple(labels[i] for i in subset), left))
        pending.append((tuple(labels[i] for i in rest), right))

    done.sort(key=lambda item: min(item[0]))
    blocks = []
    factors = []
    for labels, part in done:
        order = np.argsort(labels)
        t = np.transpose(part.as_tensor(), order)
        blocks.append(tuple(labels[k] for k in order))
        factors.append(PureState(tuple(part.dims[k] for k in order), t.reshape(-1)))
    block_dims = tuple(math.prod(state.dims[i] for i in block) for block in blocks)
    return FactorizationStructure(tuple(blocks), block_dims, tuple(factors))


def is_product_state(state: PureState, tol: float = DEFAULT_SEPARABILITY_TOL) -> bool:
    return factorize(state, tol).is_fully_separable()


def block_dimension(dims: Sequence[int], block: Sequence[int]) -> int:
    return math.prod(dims[i] for i in block)
