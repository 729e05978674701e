"""Threshold-triggered information transitions: basis selection, Born sampling, bookkeeping."""
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Iterable, List, Optional, Tuple

import numpy as np

from ..hilbert.analyzer import DEFAULT_SEPARABILITY_TOL, FactorizationStructure, factorize
from ..hilbert.state import DensityMatrix, PureState, partial_trace
from ..magnitude.quantity import LogQuantity, Unit, lq_cmp, lq_from_linear
from ..resources.calculator import Scenario, StabilityVerdict, SystemSpec, stability_check
from ..utils.errors import NonProductBasisError, StableSystemError
from ..utils.rng import SeededRNG
from .basis import (
    COMPUTATIONAL_BASIS_ID,
    Ensemble,
    TransitionBasis,
    ensemble_state_information,
    project_onto_basis,
    projected_density,
)
from .chain import ChainSpec, premeasure

logger = logging.getLogger(__name__)


class ThresholdMode(Enum):
    M1 = "M1"
    M2 = "M2"
    EXPLICIT = "explicit"


@dataclass
class TransitionConfig:
    """How and when information transitions fire.

    M1 and M2 judge the largest entangled block against the chaos and
    completeness limits at fine-graining ``mu``; EXPLICIT compares that block's
    state information with ``explicit_threshold`` (bits). The computational
    basis is always candidate 0.
    """

    threshold_mode: ThresholdMode = ThresholdMode.M2
    mu: int = 64
    rng_seed: int = 0
    candidate_bases: List[TransitionBasis] = field(default_factory=list)
    explicit_threshold: Optional[LogQuantity] = None
    energy_E: float = 1.0
    coupling_J: float = 1.0
    separability_tol: float = DEFAULT_SEPARABILITY_TOL

    def __post_init__(self):
        self.threshold_mode = ThresholdMode(self.threshold_mode)
        if self.mu < 4 or self.mu % 2:
            raise ValueError(f"mu must be even and >= 4, got {self.mu}")
        if self.threshold_mode == ThresholdMode.EXPLICIT:
            if self.explicit_threshold is None:
                raise ValueError("Explicit threshold mode needs explicit_threshold")
            self.explicit_threshold = self.explicit_threshold.with_unit(Unit.BITS)
        bases = [b for b in self.candidate_bases if b.basis_id != COMPUTATIONAL_BASIS_ID]
        self.candidate_bases = [TransitionBasis.computational()] + bases

    @classmethod
    def explicit(cls, threshold_bits: float, mu: int = 64, rng_seed: int = 0, **kwargs) -> "TransitionConfig":
        return cls(
            ThresholdMode.EXPLICIT,
            mu,
            rng_seed,
            explicit_threshold=lq_from_linear(threshold_bits, Unit.BITS),
            **kwargs,
        )

    def basis(self, basis_id: str) -> TransitionBasis:
        for candidate in self.candidate_bases:
            if candidate.basis_id == basis_id:
                return candidate
        raise KeyError(f"Unknown transition basis {basis_id}")


@dataclass
class TransitionRecord:
    time: float
    trigger: StabilityVerdict
    basis_id: str
    outcome_index: int
    probability: float
    pre_M: LogQuantity
    post_M: LogQuantity
    seed_state: Dict[str, Any]
    block: Tuple[int, ...] = ()
    forced: bool = False

    def to_dict(self) -> Dict[str, Any]:
        return {
            "time": self.time,
            "trigger": self.trigger.to_dict(),
            "basis_id": self.basis_id,
            "outcome_index": self.outcome_index,
            "probability": self.probability,
            "pre_M": self.pre_M.to_dict(),
            "post_M": self.post_M.to_dict(),
            "seed_state": self.seed_state,
            "block": list(self.block),
            "forced": self.forced,
        }


def state_information_of(structure: FactorizationStructure, mu: int) -> LogQuantity:
    return lq_from_linear(mu * structure.cost_units(), Unit.BITS)


def transition_trigger(
    state: PureState, cfg: TransitionConfig, structure: Optional[FactorizationStructure] = None
) -> Tuple[StabilityVerdict, FactorizationStructure]:
    """Stability verdict for the state's largest irreducible entangled block"""
    if structure is None:
        structure = factorize(state, cfg.separability_tol)
    block = structure.largest_block
    spec = SystemSpec(
        n=len(block),
        dims=tuple(state.dims[i] for i in block),
        energy_E=cfg.energy_E,
        coupling_J=cfg.coupling_J,
        mu=cfg.mu,
    )
    if cfg.threshold_mode == ThresholdMode.EXPLICIT:
        verdict = stability_check(spec, Scenario.EXPLICIT, threshold=cfg.explicit_threshold)
    elif cfg.threshold_mode == ThresholdMode.M1:
        verdict = stability_check(spec, Scenario.CHAOS)
    else:
        verdict = stability_check(spec, Scenario.COMPLETENESS)
    return verdict, structure


def candidate_ensembles(state: PureState, cfg: TransitionConfig) -> List[Tuple[int, TransitionBasis, Ensemble]]:
    """Ensembles induced by every usable candidate; unusable candidates are logged and skipped"""
    usable = []
    for index, basis in enumerate(cfg.candidate_bases):
        try:
            usable.append((index, basis, project_onto_basis(state, basis, cfg.separability_tol)))
        except NonProductBasisError as e:
            logger.warning(f"Rejected candidate basis {basis.basis_id}: {e}")
        except ValueError as e:
            logger.warning(f"Skipping candidate basis {basis.basis_id}: {e}")
    if not usable:
        raise ValueError("No usable transition basis among the candidates")
    return usable


def select_transition_basis(state: PureState, cfg: TransitionConfig) -> str:
    """Candidate whose induced ensemble needs the least state information; ties go to the lowest index"""
    return _select(state, cfg)[0].basis_id


def _select(state: PureState, cfg: TransitionConfig) -> Tuple[TransitionBasis, Ensemble, LogQuantity]:
    best = None
    for index, basis, ensemble in candidate_ensembles(state, cfg):
        cost = ensemble_state_information(ensemble, cfg.mu)
        logger.debug(f"Candidate {index} ({basis.basis_id}): 10^{cost.log10:.4f} bits")
        if best is None or lq_cmp(cost, best[2]) < 0:
            best = (basis, ensemble, cost)
    return best


@dataclass
class PreparedTransition:
    """Trigger verdict and selected ensemble for one state, ready to be fired repeatedly"""

    verdict: StabilityVerdict
    structure: FactorizationStructure
    basis: TransitionBasis
    ensemble: Ensemble
    mu: int

    @property
    def born_probabilities(self) -> Dict[int, float]:
        return {m.outcome_index: m.weight for m in self.ensemble.members}

    def fire(self, t: float, rng: SeededRNG, forced: bool = False) -> Tuple[PureState, TransitionRecord]:
        """Draw one member with its Born weight; the generator state before the draw goes into the record.

        ``forced`` marks a transition fired although the trigger found the state stable.
        """
        seed_state = rng.snapshot()
        k = rng.choice(self.ensemble.weights)
        member = self.ensemble.members[k]
        record = TransitionRecord(
            time=t,
            trigger=self.verdict,
            basis_id=self.basis.basis_id,
            outcome_index=member.outcome_index,
            probability=member.weight,
            pre_M=state_information_of(self.structure, self.mu),
            post_M=member.state_information(self.mu),
            seed_state=seed_state,
            block=self.structure.largest_block,
            forced=forced,
        )
        logger.debug(
            f"Information transition at t={t:g}: basis {self.basis.basis_id}, outcome {member.outcome_index} "
            f"(p={member.weight:.6g}), 10^{record.pre_M.log10:.3f} -> 10^{record.post_M.log10:.3f} bits"
        )
        return member.state, record


def prepare_transition(
    state: PureState, cfg: TransitionConfig, structure: Optional[FactorizationStructure] = None
) -> PreparedTransition:
    verdict, structure = transition_trigger(state, cfg, structure)
    basis, ensemble, _ = _select(state, cfg)
    return PreparedTransition(verdict, structure, basis, ensemble, cfg.mu)


def information_transition(
    state: PureState,
    cfg: TransitionConfig,
    t: float,
    rng: Optional[SeededRNG] = None,
    force: bool = False,
    structure: Optional[FactorizationStructure] = None,
) -> Tuple[PureState, TransitionRecord]:
    """Collapse an unstable state onto one member of the least-information basis.

    The member is drawn with its Born weight; the generator state before the
    draw is stored in the record so the outcome can be replayed.

    ``structure`` reuses a factorization already computed for ``state``. A
    stable state is only transitioned with ``force`` and its record is marked forced.
    """
    rng = rng or SeededRNG(cfg.rng_seed)
    verdict, structure = transition_trigger(state, cfg, structure)
    if verdict.stable and not force:
        raise StableSystemError(
            f"State is computationally stable (margin 10^{verdict.margin_log10:.3f}); transition refused"
        )
    basis, ensemble, _ = _select(state, cfg)
    prepared = PreparedTransition(verdict, structure, basis, ensemble, cfg.mu)
    new_state, record = prepared.fire(t, rng, forced=verdict.stable)
    logger.info(f"Information transition at t={t:g}: basis {record.basis_id}, outcome {record.outcome_index}")
    return new_state, record


def sample_outcomes(
    state: PureState, cfg: TransitionConfig, n_samples: int, rng: Optional[SeededRNG] = None
) -> Tuple[Ensemble, np.ndarray]:
    """Draw ``n_samples`` outcome indices from the selected basis without re-selecting each time"""
    rng = rng or SeededRNG(cfg.rng_seed)
    _, ensemble, _ = _select(state, cfg)
    outcomes = np.array([ensemble.members[rng.choice(ensemble.weights)].outcome_index for _ in range(n_samples)])
    return ensemble, outcomes


def nonselective_transition(state: PureState, basis: TransitionBasis, tol: float = DEFAULT_SEPARABILITY_TOL) -> Ensemble:
    """Proper mixture of every outcome of the transition, weighted by Born probabilities"""
    return project_onto_basis(state, basis, tol)


def nonselective_transition_density(state: PureState, basis: TransitionBasis) -> DensityMatrix:
    return projected_density(state, basis)


def verify_reduced_invariance(state: PureState, basis: TransitionBasis, discard: Iterable[int]) -> float:
    """Largest entry of |Tr_discard(|psi><psi|) - Tr_discard(rho')| with rho' the transitioned density"""
    discard = set(discard)
    keep = [i for i in range(state.n) if i not in discard]
    if not keep:
        return 0.0
    before = partial_trace(state.density(), keep)
    after = partial_trace(nonselective_transition_density(state, basis), keep)
    return float(np.max(np.abs(before.mat - after.mat)))


def cat_mixture(chain: ChainSpec, amplitudes: Tuple[complex, complex] = (1.0, 1.0)) -> Ensemble:
    """Proper mixture left when a two-sector cat state transitions in its apparatus basis.

    Only the system and apparatus factors are projected, so each member keeps
    its full environment superposition and carries the summed environment weight.
    """
    if chain.system_dim != 2:
        raise ValueError(f"A cat mixture needs two macro-sectors, got {chain.system_dim}")
    system = PureState.from_amplitudes((2,), np.asarray(amplitudes, dtype=complex))
    upsilon = premeasure(system, chain)
    basis = TransitionBasis(
        "cat-pointer",
        factors=[np.eye(2, dtype=complex), np.eye(chain.apparatus_dim, dtype=complex), None],
    )
    return nonselective_transition(upsilon, basis)


def environment_rotated_basis(chain: ChainSpec, unitary: np.ndarray, complete: bool = False) -> TransitionBasis:
    """Basis measuring only the environment in a rotated basis; with ``complete`` system and apparatus are projected too"""
    if complete:
        factors = [np.eye(chain.system_dim), np.eye(chain.apparatus_dim), unitary]
    else:
        factors = [None, None, unitary]
    return TransitionBasis("environment-rotated" + ("-complete" if complete else ""), factors=factors)
