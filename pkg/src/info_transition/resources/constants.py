import json
import logging
import math
from enum import Enum
from pathlib import Path
from typing import Optional

from pydantic import BaseModel, Field

from ..utils.errors import ScenarioError

logger = logging.getLogger(__name__)


class PhysicalConstants(BaseModel):
    """Versioned constants table (SI units)"""

    version: str = "codata-2018-rounded/1"
    hbar: float = Field(1.0546e-34, gt=0, description="J s")
    h: float = Field(6.626e-34, gt=0, description="J s")
    t_P: float = Field(5.391e-44, gt=0, description="Planck time, s")
    c: float = Field(2.998e8, gt=0, description="m/s")
    k_B: float = Field(1.381e-23, gt=0, description="J/K")
    m_p: float = Field(1.673e-27, gt=0, description="kg")
    m_e: float = Field(9.109e-31, gt=0, description="kg")
    t_U: float = Field(1e17, gt=0, description="age of the universe, s")

    model_config = {"frozen": True, "extra": "forbid"}

    @property
    def l_P(self) -> float:
        """Planck length c * t_P"""
        return self.c * self.t_P

    @property
    def electron_rest_energy(self) -> float:
        return self.m_e * self.c ** 2

    @classmethod
    def from_json(cls, path: str) -> "PhysicalConstants":
        """Load a constants table; missing entries keep their defaults"""
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
        data.pop("schema", None)
        return cls(**data)

    def to_json(self, path: str) -> None:
        Path(path).write_text(json.dumps(self.model_dump(), indent=2, sort_keys=True), encoding="utf-8")

    def with_overrides(self, **overrides) -> "PhysicalConstants":
        return self.model_copy(update=overrides)


DEFAULT_CONSTANTS = PhysicalConstants()


class UnitSystem(Enum):
    SI = "si"
    NATURAL = "natural"


def hbar_for(units: UnitSystem = UnitSystem.SI, constants: Optional[PhysicalConstants] = None) -> float:
    """Reduced Planck constant in the requested unit system; NATURAL sets it to 1"""
    if units == UnitSystem.NATURAL:
        return 1.0
    return (constants or DEFAULT_CONSTANTS).hbar


LN2 = math.log(2.0)
LN10 = math.log(10.0)
LOG10_2 = math.log10(2.0)


def load_constants(path: Optional[str] = None) -> PhysicalConstants:
    """Resolve a constants table: explicit path, then configured path, then defaults"""
    if path is None:
        from ..utils.config import get_settings
        path = get_settings().get_constants_path()
    if not path:
        return DEFAULT_CONSTANTS
    try:
        constants = PhysicalConstants.from_json(path)
        logger.info(f"Loaded constants table {constants.version} from {path}")
        return constants
    except Exception as e:
        logger.error(f"Failed to load constants from {path}: {e}")
        raise ScenarioError(f"Cannot load constants table {path}: {e}") from e
