"""Outcome statistics over transition records: Born-rule chi-squared and unitary-phase histograms."""
import logging
from collections import Counter
from typing import Any, Dict, List, Mapping, Sequence, Tuple, Union

import numpy as np
from scipy.stats import chi2

from ..measurement.transition import TransitionRecord
from ..utils.errors import UndersampledError

logger = logging.getLogger(__name__)

MIN_EXPECTED_COUNT = 5.0
DEFAULT_BINS = 10

Outcome = Union[int, TransitionRecord, Mapping[str, Any]]


def _outcome(item: Outcome) -> int:
    if isinstance(item, TransitionRecord):
        return item.outcome_index
    if isinstance(item, Mapping):
        return int(item["outcome_index"])
    return int(item)


def _time(item: Union[TransitionRecord, Mapping[str, Any]]) -> float:
    return item.time if isinstance(item, TransitionRecord) else float(item["time"])


def outcome_counts(records: Sequence[Outcome]) -> Dict[int, int]:
    return dict(sorted(Counter(_outcome(r) for r in records).items()))


def _expected_probabilities(expected: Union[Sequence[float], Mapping[int, float]]) -> Dict[int, float]:
    if isinstance(expected, Mapping):
        probs = {int(k): float(p) for k, p in expected.items()}
    else:
        probs = {k: float(p) for k, p in enumerate(expected)}
    if not probs or any(p < 0 for p in probs.values()):
        raise ValueError("Expected probabilities must be non-empty and non-negative")
    total = sum(probs.values())
    if total <= 0:
        raise ValueError("Expected probabilities sum to zero")
    return {k: p / total for k, p in sorted(probs.items())}


def born_chi_squared(
    records: Sequence[Outcome], expected: Union[Sequence[float], Mapping[int, float]]
) -> Tuple[float, float]:
    """Pearson statistic of observed outcome counts against Born probabilities.

    ``expected`` is either a probability list indexed by outcome or a mapping
    from outcome index to probability. The p-value comes from the chi-squared
    distribution with k - 1 degrees of freedom.
    """
    probs = _expected_probabilities(expected)
    counts = outcome_counts(records)
    unknown = set(counts) - set(probs)
    if unknown:
        raise ValueError(f"Outcomes {sorted(unknown)} have no expected probability")
    n = sum(counts.values())
    outcomes = list(probs)
    expected_counts = np.array([n * probs[k] for k in outcomes])
    if n == 0 or np.any(expected_counts < MIN_EXPECTED_COUNT):
        raise UndersampledError(
            f"Expected counts {np.round(expected_counts, 2).tolist()} fall below {MIN_EXPECTED_COUNT:g} for {n} samples"
        )
    observed = np.array([counts.get(k, 0) for k in outcomes], dtype=float)
    statistic = float(np.sum((observed - expected_counts) ** 2 / expected_counts))
    dof = len(outcomes) - 1
    p_value = float(chi2.sf(statistic, dof)) if dof > 0 else 1.0
    logger.debug(f"Chi-squared {statistic:.4f} with {dof} dof over {n} samples, p={p_value:.4g}")
    return statistic, p_value


def transition_intervals(trajectories: Sequence[Sequence[Outcome]]) -> List[float]:
    """Time between consecutive transitions of each trajectory, the first measured from t=0"""
    intervals = []
    for records in trajectories:
        last = 0.0
        for record in records:
            now = _time(record)
            intervals.append(now - last)
            last = now
    return intervals


def tau_u_histogram(trajectories: Sequence[Sequence[Outcome]], bins: int = DEFAULT_BINS) -> Dict[str, Any]:
    """Histogram of unitary-phase durations with their mean and variance.

    No transitions at all is a valid outcome: the histogram is empty and the
    summary statistics are None.
    """
    intervals = np.array(transition_intervals(trajectories), dtype=float)
    if intervals.size == 0:
        return {"counts": [], "edges": [], "n": 0, "mean": None, "variance": None}
    counts, edges = np.histogram(intervals, bins=bins)
    return {
        "counts": counts.tolist(),
        "edges": edges.tolist(),
        "n": int(intervals.size),
        "mean": float(np.mean(intervals)),
        "variance": float(np.var(intervals)),
    }
