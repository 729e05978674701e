"""System -> apparatus -> environment pre-measurement chains."""
import logging
import math
from dataclasses import dataclass
from typing import Any, Dict, Tuple

import numpy as np

from ..hilbert.state import PureState, check_capacity
from ..utils.errors import DimensionMismatchError
from ..utils.rng import SeededRNG

logger = logging.getLogger(__name__)

WEIGHT_TOL = 1e-12


def _normalize_rows(weights: np.ndarray) -> np.ndarray:
    norms = np.sqrt(np.sum(np.abs(weights) ** 2, axis=-1, keepdims=True))
    if np.any(norms == 0):
        raise ValueError("Every weight profile needs at least one non-zero entry")
    return weights / norms


@dataclass
class ChainSpec:
    """Weights and sizes of a pre-measurement chain.

    Apparatus pointer sector i carries ``micro_M`` microstates xi with weights
    ``weights_M[i, xi]``; each apparatus microstate (i, xi) drives ``micro_Q``
    environment microstates eta with weights ``weights_Q[i, xi, eta]``.
    ``theta_env`` sets how far the environment sectors have decohered: the
    environment vectors of two different apparatus microstates overlap by
    ``1 - theta_env``.
    """

    system_dim: int
    micro_M: int
    weights_M: np.ndarray
    micro_Q: int
    weights_Q: np.ndarray
    theta_env: float = 1.0

    def __post_init__(self):
        D, m, q = self.system_dim, self.micro_M, self.micro_Q
        if D < 2 or m < 1 or q < 1:
            raise ValueError(f"Need D >= 2 and micro dims >= 1, got D={D}, m={m}, q={q}")
        if not 0.0 <= self.theta_env <= 1.0:
            raise ValueError(f"theta_env must lie in [0, 1], got {self.theta_env}")
        weights_M = np.asarray(self.weights_M, dtype=complex)
        weights_Q = np.asarray(self.weights_Q, dtype=complex)
        if weights_M.shape != (D, m):
            raise DimensionMismatchError(f"weights_M shape {weights_M.shape}, expected {(D, m)}")
        if weights_Q.shape != (D, m, q):
            raise DimensionMismatchError(f"weights_Q shape {weights_Q.shape}, expected {(D, m, q)}")
        for name, w in (("weights_M", weights_M), ("weights_Q", weights_Q)):
            norms = np.sum(np.abs(w) ** 2, axis=-1)
            if np.max(np.abs(norms - 1.0)) > WEIGHT_TOL:
                raise ValueError(f"{name} rows must have unit norm")
        check_capacity(self.dims, "Chain")
        self.weights_M = weights_M
        self.weights_Q = weights_Q

    @classmethod
    def uniform(cls, D: int, micro_M: int = 1, micro_Q: int = 1, theta_env: float = 1.0) -> "ChainSpec":
        weights_M = np.full((D, micro_M), 1.0 / math.sqrt(micro_M), dtype=complex)
        weights_Q = np.full((D, micro_M, micro_Q), 1.0 / math.sqrt(micro_Q), dtype=complex)
        return cls(D, micro_M, weights_M, micro_Q, weights_Q, theta_env)

    @classmethod
    def random(
        cls, D: int, micro_M: int, micro_Q: int, rng: SeededRNG, theta_env: float = 1.0
    ) -> "ChainSpec":
        """Complex Gaussian weight profiles, normalized per sector"""
        gen = rng.generator
        weights_M = gen.normal(size=(D, micro_M)) + 1j * gen.normal(size=(D, micro_M))
        weights_Q = gen.normal(size=(D, micro_M, micro_Q)) + 1j * gen.normal(size=(D, micro_M, micro_Q))
        return cls(D, micro_M, _normalize_rows(weights_M), micro_Q, _normalize_rows(weights_Q), theta_env)

    @property
    def apparatus_dim(self) -> int:
        return self.system_dim * self.micro_M

    @property
    def environment_dim(self) -> int:
        # one sector per apparatus microstate plus a shared sector for partial decoherence
        return (self.apparatus_dim + 1) * self.micro_Q

    @property
    def dims(self) -> Tuple[int, int, int]:
        return (self.system_dim, self.apparatus_dim, self.environment_dim)

    def apparatus_index(self, i: int, xi: int) -> int:
        return i * self.micro_M + xi

    def environment_vector(self, i: int, xi: int, eta: int) -> np.ndarray:
        """Environment state for microstate eta of sector (i, xi)"""
        q = self.micro_Q
        vec = np.zeros(self.environment_dim, dtype=complex)
        sector = self.apparatus_index(i, xi)
        vec[sector * q + eta] = math.sqrt(self.theta_env)
        if self.theta_env < 1.0:
            vec[self.apparatus_dim * q + eta] = math.sqrt(1.0 - self.theta_env)
        return vec

    def to_dict(self) -> Dict[str, Any]:
        def encode(w: np.ndarray):
            return [[float(z.real), float(z.imag)] for z in w.reshape(-1)]

        return {
            "system_dim": self.system_dim,
            "micro_M": self.micro_M,
            "micro_Q": self.micro_Q,
            "theta_env": self.theta_env,
            "weights_M": encode(self.weights_M),
            "weights_Q": encode(self.weights_Q),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ChainSpec":
        D, m, q = int(data["system_dim"]), int(data.get("micro_M", 1)), int(data.get("micro_Q", 1))
        theta = float(data.get("theta_env", 1.0))
        if "weights_M" not in data and "weights_Q" not in data:
            return cls.uniform(D, m, q, theta)

        def decode(values, shape):
            return _normalize_rows(np.array([complex(re, im) for re, im in values]).reshape(shape))

        return cls(D, m, decode(data["weights_M"], (D, m)), q, decode(data["weights_Q"], (D, m, q)), theta)


def premeasure(system: PureState, chain: ChainSpec) -> PureState:
    """Correlate every system state |i> with its apparatus and environment sectors.

    Result: sum_i a_i sum_xi eM[i,xi] sum_eta eQ[i,xi,eta] |i>|i,xi>|e(i,xi,eta)>.
    """
    if system.dims != (chain.system_dim,):
        raise DimensionMismatchError(f"System dims {system.dims} do not match chain dimension {chain.system_dim}")
    D, m, q = chain.system_dim, chain.micro_M, chain.micro_Q
    amps = np.zeros(chain.dims, dtype=complex)
    for i in range(D):
        a = system.amps[i]
        if a == 0:
            continue
        for xi in range(m):
            k = chain.apparatus_index(i, xi)
            for eta in range(q):
                w = a * chain.weights_M[i, xi] * chain.weights_Q[i, xi, eta]
                amps[i, k, :] += w * chain.environment_vector(i, xi, eta)
    logger.debug(f"Pre-measured {D}-state system into chain dims {chain.dims}")
    return PureState.from_amplitudes(chain.dims, amps.reshape(-1))


def pointer_projector_weights(system: PureState, chain: ChainSpec) -> np.ndarray:
    """Probability of each (i, xi) apparatus microstate: |a_i|^2 |eM[i,xi]|^2"""
    return (np.abs(system.amps) ** 2)[:, None] * np.abs(chain.weights_M) ** 2
