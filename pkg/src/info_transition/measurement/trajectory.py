"""Alternating unitary phases and information transitions."""
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np

from ..dynamics.hamiltonian import HamiltonianSpec, propagator
from ..dynamics.lindblad import step_count
from ..hilbert.state import PureState
from ..utils.errors import DimensionMismatchError
from ..utils.rng import SeededRNG
from .transition import TransitionConfig, TransitionRecord, information_transition, transition_trigger

logger = logging.getLogger(__name__)


@dataclass
class TrajectoryResult:
    records: List[TransitionRecord]
    final_state: PureState
    steps: int
    t_total: float
    unitary_durations: List[float] = field(default_factory=list)

    @property
    def n_transitions(self) -> int:
        return len(self.records)

    def mean_unitary_duration(self) -> Optional[float]:
        if not self.unitary_durations:
            return None
        return float(np.mean(self.unitary_durations))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "steps": self.steps,
            "t_total": self.t_total,
            "n_transitions": self.n_transitions,
            "unitary_durations": self.unitary_durations,
            "final_state": self.final_state.to_dict(),
        }


def run_trajectory(
    initial: PureState,
    H: HamiltonianSpec,
    cfg: TransitionConfig,
    t_total: float,
    dt: float,
    rng: Optional[SeededRNG] = None,
) -> TrajectoryResult:
    """Evolve in steps of dt, checking stability after each step and transitioning when unstable.

    Transitions are instantaneous and take the timestamp of the step that
    triggered them. ``unitary_durations`` lists the time between consecutive
    transitions, the first measured from t=0.
    """
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if initial.dim != np.prod(H.dims):
        raise DimensionMismatchError(f"Hamiltonian dims {H.dims} do not match state dims {initial.dims}")
    rng = rng or SeededRNG(cfg.rng_seed)
    steps = step_count(t_total, dt)
    h = t_total / steps if steps else dt
    U = propagator(H, h) if steps else None

    state = initial
    records: List[TransitionRecord] = []
    durations: List[float] = []
    last_transition = 0.0
    logger.info(f"Trajectory: {steps} steps of {h:g}, mode {cfg.threshold_mode.value}, seed {cfg.rng_seed}")
    for step in range(1, steps + 1):
        state = PureState.from_amplitudes(state.dims, U @ state.amps)
        now = step * h
        verdict, structure = transition_trigger(state, cfg)
        if verdict.stable:
            continue
        state, record = information_transition(state, cfg, now, rng=rng, structure=structure)
        records.append(record)
        durations.append(now - last_transition)
        last_transition = now
    logger.info(f"Trajectory finished with {len(records)} transitions")
    return TrajectoryResult(records, state, steps, t_total, durations)
