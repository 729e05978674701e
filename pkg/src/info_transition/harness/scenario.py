"""Scenario files and run manifests."""
import hashlib
import json
import logging
import math
from contextlib import contextmanager
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from ..dynamics.hamiltonian import HamiltonianSpec
from ..dynamics.lattice import LatticeState
from ..dynamics.lindblad import LindbladSpec
from ..hilbert.state import PureState
from ..measurement.basis import TransitionBasis
from ..measurement.chain import ChainSpec
from ..measurement.transition import ThresholdMode, TransitionConfig
from ..magnitude.quantity import Unit, lq_from_linear
from ..resources.constants import PhysicalConstants, UnitSystem
from ..utils.errors import InfoTransitionError, ScenarioError
from ..utils.rng import SeededRNG

logger = logging.getLogger(__name__)

SCENARIO_SCHEMA = "info-transition/scenario/1"

ComplexPair = Tuple[float, float]
ComplexMatrix = List[List[ComplexPair]]


def _complex_matrix(rows: ComplexMatrix) -> np.ndarray:
    return np.array([[complex(re, im) for re, im in row] for row in rows])


@contextmanager
def resolving(what: str):
    """Turn domain failures while building ``what`` into ScenarioError"""
    try:
        yield
    except ScenarioError:
        raise
    except (InfoTransitionError, ValueError, KeyError, TypeError) as e:
        raise ScenarioError(f"Cannot resolve {what}: {e}") from e


class ScenarioMode(str, Enum):
    ESTIMATE = "estimate"
    SIMULATE = "simulate"
    LINDBLAD = "lindblad"
    LATTICE = "lattice"
    MEASURE = "measure"


class StateConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    dims: List[int] = Field(min_length=1)
    amplitudes: Optional[List[ComplexPair]] = None
    basis_index: int = Field(0, ge=0)

    def to_state(self) -> PureState:
        with resolving("initial_state"):
            if self.amplitudes is None:
                return PureState.basis(self.dims, self.basis_index)
            return PureState.from_amplitudes(self.dims, [complex(re, im) for re, im in self.amplitudes])


class HamiltonianConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: Literal["dense", "qubit_flip", "x_chain", "free_particle"]
    dims: Optional[List[int]] = None
    params: Dict[str, Any] = Field(default_factory=dict)

    def to_spec(self, units: UnitSystem, constants: PhysicalConstants) -> HamiltonianSpec:
        with resolving("hamiltonian"):
            data = {"kind": self.kind, "params": self.params, "units": units.value}
            if self.dims is not None:
                data["dims"] = self.dims
            spec = HamiltonianSpec.from_dict(data)
            spec.constants = constants
            spec.materialize()
            return spec


class ChainConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    system_dim: int = Field(ge=2)
    micro_M: int = Field(1, ge=1)
    micro_Q: int = Field(1, ge=1)
    theta_env: float = Field(1.0, ge=0.0, le=1.0)
    random_weights: bool = False
    weights_M: Optional[List[ComplexPair]] = None
    weights_Q: Optional[List[ComplexPair]] = None

    @model_validator(mode="after")
    def _weights_together(self) -> "ChainConfig":
        if (self.weights_M is None) != (self.weights_Q is None):
            raise ValueError("weights_M and weights_Q must be given together")
        if self.random_weights and self.weights_M is not None:
            raise ValueError("random_weights excludes explicit weights")
        return self

    def to_spec(self, rng: SeededRNG) -> ChainSpec:
        with resolving("chain"):
            if self.random_weights:
                return ChainSpec.random(self.system_dim, self.micro_M, self.micro_Q, rng, self.theta_env)
            return ChainSpec.from_dict(self.model_dump(exclude_none=True, exclude={"random_weights"}))


class BasisConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    basis_id: str = Field(min_length=1)
    factors: Optional[List[Optional[ComplexMatrix]]] = None
    vectors: Optional[ComplexMatrix] = None

    def to_basis(self) -> TransitionBasis:
        with resolving(f"basis {self.basis_id}"):
            return TransitionBasis.from_dict(self.model_dump(exclude_none=True))


class TransitionSettings(BaseModel):
    """Threshold mode and candidate bases; unset mu and tolerance come from Settings"""

    model_config = ConfigDict(extra="forbid")

    threshold_mode: Literal["M1", "M2", "explicit"] = "M2"
    mu: Optional[int] = Field(None, ge=4)
    explicit_threshold_bits: Optional[float] = Field(None, gt=0)
    energy_E: float = Field(1.0, gt=0)
    coupling_J: float = Field(1.0, gt=0)
    separability_tol: Optional[float] = Field(None, gt=0)
    candidate_bases: List[BasisConfig] = Field(default_factory=list)
    # Lets single-shot measure mode fire on a stable state; its records are marked forced
    force: bool = False

    @model_validator(mode="after")
    def _explicit_needs_threshold(self) -> "TransitionSettings":
        if self.threshold_mode == "explicit" and self.explicit_threshold_bits is None:
            raise ValueError("explicit threshold mode needs explicit_threshold_bits")
        if self.mu is not None and self.mu % 2:
            raise ValueError(f"mu must be even, got {self.mu}")
        return self

    def to_config(self, seed: int, default_mu: int, default_tol: float) -> TransitionConfig:
        with resolving("transition"):
            threshold = None
            if self.explicit_threshold_bits is not None:
                threshold = lq_from_linear(self.explicit_threshold_bits, Unit.BITS)
            return TransitionConfig(
                threshold_mode=ThresholdMode(self.threshold_mode),
                mu=self.mu or default_mu,
                rng_seed=seed,
                candidate_bases=[b.to_basis() for b in self.candidate_bases],
                explicit_threshold=threshold,
                energy_E=self.energy_E,
                coupling_J=self.coupling_J,
                separability_tol=self.separability_tol or default_tol,
            )


class EvolutionConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    t_total: float = Field(0.0, ge=0.0)
    dt: float = Field(1.0, gt=0.0)
    samples: int = Field(10, ge=1)


class LindbladConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    collapse_ops: List[ComplexMatrix] = Field(default_factory=list)
    initial_density: Optional[ComplexMatrix] = None

    def to_spec(self, H0: HamiltonianSpec) -> LindbladSpec:
        with resolving("lindblad"):
            return LindbladSpec(H0, [_complex_matrix(op) for op in self.collapse_ops])

    def initial_matrix(self) -> Optional[np.ndarray]:
        return None if self.initial_density is None else _complex_matrix(self.initial_density)


class LatticeConfig(BaseModel):
    """Gaussian packet on a hard-wall lattice; no mass means the kinetic term is off"""

    model_config = ConfigDict(extra="forbid")

    n_points: int = Field(16, ge=2)
    dx: float = Field(gt=0.0)
    sigma: float = Field(gt=0.0)
    center: float = 0.0
    wavenumber: float = 0.0
    mass: Optional[float] = Field(None, gt=0.0)
    Lambda: float = Field(0.0, ge=0.0)
    method: Literal["direct", "lindblad"] = "direct"

    @model_validator(mode="after")
    def _lindblad_needs_mass(self) -> "LatticeConfig":
        if self.method == "lindblad" and self.mass is None:
            raise ValueError("the lindblad lattice method needs a finite mass")
        return self

    @property
    def effective_mass(self) -> float:
        return math.inf if self.mass is None else self.mass

    def initial_state(self) -> LatticeState:
        with resolving("lattice"):
            return LatticeState.gaussian(self.n_points, self.dx, self.sigma, self.center, self.wavenumber)


class EstimateSelection(BaseModel):
    model_config = ConfigDict(extra="forbid")

    names: List[str] = Field(default_factory=lambda: ["all"])
    params: Dict[str, Dict[str, Any]] = Field(default_factory=dict)


class OutputConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    records: str = "records.jsonl"
    stats: str = "stats.csv"
    snapshot: str = "lattice.csv"
    table: str = "estimates.txt"
    manifest: str = "manifest.json"


class Scenario(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    schema_tag: Literal["info-transition/scenario/1"] = Field(SCENARIO_SCHEMA, alias="schema")
    id: str = Field(min_length=1)
    mode: ScenarioMode
    seed: int = Field(0, ge=0)
    trajectory_count: int = Field(1, ge=1)
    units: UnitSystem = UnitSystem.SI
    constants_path: Optional[str] = None
    initial_state: Optional[StateConfig] = None
    hamiltonian: Optional[HamiltonianConfig] = None
    chain: Optional[ChainConfig] = None
    transition: Optional[TransitionSettings] = None
    evolution: EvolutionConfig = Field(default_factory=EvolutionConfig)
    lindblad: Optional[LindbladConfig] = None
    lattice: Optional[LatticeConfig] = None
    estimates: EstimateSelection = Field(default_factory=EstimateSelection)
    outputs: OutputConfig = Field(default_factory=OutputConfig)

    @model_validator(mode="after")
    def _references_resolve(self) -> "Scenario":
        missing = [name for name in self._required_sections() if getattr(self, name) is None]
        if missing:
            raise ValueError(f"{self.mode.value} scenario needs {', '.join(missing)}")
        if self.mode == ScenarioMode.LINDBLAD and self.initial_state is None and self.lindblad.initial_density is None:
            raise ValueError("lindblad scenario needs initial_state or lindblad.initial_density")
        if self.mode == ScenarioMode.MEASURE and self.initial_state is None:
            raise ValueError("measure scenario needs initial_state")
        if self.chain is not None and self.initial_state is not None:
            if self.initial_state.dims != [self.chain.system_dim]:
                raise ValueError(
                    f"initial_state dims {self.initial_state.dims} do not match chain system_dim {self.chain.system_dim}"
                )
        return self

    def _required_sections(self) -> List[str]:
        if self.mode == ScenarioMode.SIMULATE:
            return ["hamiltonian", "initial_state"]
        if self.mode == ScenarioMode.LINDBLAD:
            return ["hamiltonian", "lindblad"]
        if self.mode == ScenarioMode.LATTICE:
            return ["lattice"]
        if self.mode == ScenarioMode.MEASURE:
            return ["transition"]
        return []


def digest_text(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def parse_scenario(data: Dict[str, Any]) -> Scenario:
    try:
        return Scenario.model_validate(data)
    except ValidationError as e:
        raise ScenarioError(f"Scenario failed validation: {e}") from e


def load_scenario(path: str) -> Tuple[Scenario, str]:
    """Parse a scenario file; returns the scenario and the SHA-256 of its text"""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as e:
        raise ScenarioError(f"Cannot read scenario {path}: {e}") from e
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ScenarioError(f"Scenario {path} is not valid JSON: {e}") from e
    if not isinstance(data, dict):
        raise ScenarioError(f"Scenario {path} must hold a JSON object")
    scenario = parse_scenario(data)
    logger.info(f"Loaded scenario {scenario.id} ({scenario.mode.value}) from {path}")
    return scenario, digest_text(text)


@dataclass
class RunManifest:
    """Everything needed to reproduce a run and check that it was reproduced"""

    scenario_id: str
    mode: str
    tool_version: str
    constants_version: str
    units: str
    master_seed: int
    trajectory_seeds: List[Dict[str, Any]] = field(default_factory=list)
    started_at: str = ""
    finished_at: str = ""
    outputs: Dict[str, str] = field(default_factory=dict)
    scenario_path: Optional[str] = None
    scenario_digest: Optional[str] = None
    summary: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "scenario_id": self.scenario_id,
            "mode": self.mode,
            "tool_version": self.tool_version,
            "constants_version": self.constants_version,
            "units": self.units,
            "master_seed": self.master_seed,
            "trajectory_seeds": self.trajectory_seeds,
            "started_at": self.started_at,
            "finished_at": self.finished_at,
            "outputs": self.outputs,
            "scenario_path": self.scenario_path,
            "scenario_digest": self.scenario_digest,
            "summary": self.summary,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "RunManifest":
        try:
            return cls(
                scenario_id=data["scenario_id"],
                mode=data["mode"],
                tool_version=data["tool_version"],
                constants_version=data["constants_version"],
                units=data["units"],
                master_seed=int(data["master_seed"]),
                trajectory_seeds=list(data.get("trajectory_seeds", [])),
                started_at=data.get("started_at", ""),
                finished_at=data.get("finished_at", ""),
                outputs=dict(data.get("outputs", {})),
                scenario_path=data.get("scenario_path"),
                scenario_digest=data.get("scenario_digest"),
                summary=dict(data.get("summary", {})),
            )
        except KeyError as e:
            raise ScenarioError(f"Manifest is missing {e}") from e
