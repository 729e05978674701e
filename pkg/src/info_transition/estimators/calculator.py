from typing import Any, Callable, Dict, List, Optional, Tuple
from dataclasses import dataclass, field
import logging
import math

from ..magnitude.quantity import LogQuantity, Unit, lq_from_linear, lq_from_log10
from ..resources import calculator as resources
from ..resources.calculator import SystemSpec
from ..resources.constants import DEFAULT_CONSTANTS, LN2, LOG10_2, PhysicalConstants

BLACKBODY_DECADES = resources.BLACKBODY_DECADES_PER_DOF
DEFAULT_DOF_PER_ATOM_FACTOR = resources.DOF_PER_ATOM
AGREEMENT_DECADES = 1.0


@dataclass
class EstimateReport:
    """One worked estimate with its inputs and its distance from the published figure.

    ``compare`` is "value" when agreement is the log10 gap between the values and
    "exponent" when the value is a double exponential (its log10 is itself the
    quoted exponent) so the gap is taken between the exponents.
    """
    name: str
    inputs: Dict[str, Any]
    formula: str
    value: LogQuantity
    published_value: Optional[LogQuantity] = None
    agreement: Optional[float] = None
    compare: str = "value"
    inconsistency: Optional[str] = None
    extras: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.published_value is not None and self.agreement is None:
            if self.compare == "exponent":
                self.agreement = abs(math.log10(abs(self.value.log10)) - math.log10(abs(self.published_value.log10)))
            else:
                self.agreement = abs(self.value.log10 - self.published_value.log10)

    @property
    def within_agreement(self) -> bool:
        return self.agreement is None or self.agreement <= AGREEMENT_DECADES

    @property
    def acceptable(self) -> bool:
        return self.within_agreement or self.inconsistency is not None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "inputs": self.inputs,
            "formula": self.formula,
            "value": self.value.to_dict(),
            "published_value": self.published_value.to_dict() if self.published_value else None,
            "agreement": self.agreement,
            "compare": self.compare,
            "inconsistency": self.inconsistency,
            "extras": self.extras,
        }


class EstimateCalculator:
    def __init__(self, constants: Optional[PhysicalConstants] = None):
        self.constants = constants or DEFAULT_CONSTANTS
        self.logger = logging.getLogger(__name__)
        self.estimators: Dict[str, Callable[..., EstimateReport]] = {
            "planck_cells": self.report_planck_cells,
            "electron_dimension": self.report_electron_dimension,
            "electron_min_mu": self.report_electron_min_mu,
            "electron_state_info": self.report_electron_state_info,
            "electron_op_rate": self.report_electron_op_rate,
            "electron_quantum_op_rate": self.report_electron_quantum_op_rate,
            "electron_position_op_rate": self.report_electron_position_op_rate,
            "laptop_state_info": self.report_laptop_state_info,
            "laptop_particle_state_info": self.report_laptop_particle_state_info,
            "ultimate_laptop_photons": self.report_ultimate_laptop_photons,
            "ultimate_laptop_state_info": self.report_ultimate_laptop_state_info,
            "universe_photons": self.report_universe_photons,
            "universe_state_info": self.report_universe_state_info,
            "universe_op_rate": self.report_universe_op_rate,
            "universe_ops": self.report_universe_ops,
            "universe_bits": self.report_universe_bits,
            "laptop_evolution_budget": self.report_laptop_evolution_budget,
            "max_qubits_baryon_memory": self.report_max_qubits_baryon_memory,
            "max_qubits_holographic": self.report_max_qubits_holographic,
            "info_length_scale": self.report_info_length_scale,
            "unitary_phase_duration": self.report_unitary_phase_duration,
            "thermal_spread": self.report_thermal_spread,
            "largest_coherent_object": self.report_largest_coherent_object,
            "coherent_molecule_mu": self.report_coherent_molecule_mu,
            "cat_state_info": self.report_cat_state_info,
            "condensate_state_info": self.report_condensate_state_info,
        }

    # Raw estimates

    def planck_cells(self) -> LogQuantity:
        """Planck-volume cells inside a sphere of radius c t_U"""
        c = self.constants
        return lq_from_log10(math.log10(4.0 * math.pi / 3.0) + 3.0 * math.log10(c.t_U / c.t_P), Unit.COUNT)

    def electron_dimension(self) -> LogQuantity:
        """Two spin states per cell"""
        return self.planck_cells().scaled(2.0)

    def electron_state_info(self, mu: float) -> LogQuantity:
        return lq_from_log10(self.electron_dimension().log10 + math.log10(mu), Unit.BITS)

    def electron_min_mu(self) -> float:
        """log2 of the electron's dimension, the figure behind the quoted 600 bits"""
        return self.electron_dimension().log2

    def strict_completeness_mu(self) -> float:
        return 2.0 * self.electron_min_mu()

    def blackbody_temperature(self, rho: float) -> float:
        """k_B T of radiation with energy density rho c^2, in joules"""
        c = self.constants
        return (15.0 * c.hbar ** 3 * c.c ** 5 * rho / math.pi ** 2) ** 0.25

    def blackbody_photon_count(self, mass: float, volume: float) -> float:
        """Photons left when ``mass`` in ``volume`` is converted to radiation"""
        if mass <= 0 or volume <= 0:
            raise ValueError("mass and volume must be positive")
        c = self.constants
        energy = mass * c.c ** 2
        return (2.0 / (3.0 * LN2)) * (math.pi ** 2 * volume / (15.0 * c.hbar ** 3 * c.c ** 3)) ** 0.25 * energy ** 0.75

    def horizon_volume(self) -> float:
        """Volume within the particle horizon 3 c t_U of a matter-dominated universe"""
        radius = 3.0 * self.constants.c * self.constants.t_U
        return 4.0 * math.pi / 3.0 * radius ** 3

    def object_state_info(self, mass: float, mean_atomic_number: float, mu: float,
                          dof_per_atom: Optional[float] = None) -> LogQuantity:
        """State information of a body of ``mass`` kg, 10^(182 dof n) mu bits.

        Atoms weigh about 2 N_a proton masses; each contributes 7 N_a degrees of
        freedom unless ``dof_per_atom`` overrides it.
        """
        if mass <= 0 or mean_atomic_number <= 0:
            raise ValueError("mass and atomic number must be positive")
        atoms = mass / (2.0 * mean_atomic_number * self.constants.m_p)
        dof = DEFAULT_DOF_PER_ATOM_FACTOR * mean_atomic_number if dof_per_atom is None else dof_per_atom
        return lq_from_log10(BLACKBODY_DECADES * dof * atoms + math.log10(mu), Unit.BITS)

    def largest_coherent_object(self, mu: float, dof_per_atom: float) -> float:
        """Atoms whose 10^(182 dof n) amplitudes still fit under 2^(mu/2)"""
        return mu * LOG10_2 / (2.0 * BLACKBODY_DECADES * dof_per_atom)

    def mu_from_coherent_object(self, atoms: float, dof_per_atom: float) -> float:
        return 2.0 * BLACKBODY_DECADES * dof_per_atom * atoms / LOG10_2

    def universe_budget(self) -> Tuple[LogQuantity, LogQuantity]:
        """Operations and holographic bits available to the universe, both (t_U/t_P)^2"""
        ratio = math.log10(self.constants.t_U / self.constants.t_P)
        return lq_from_log10(2.0 * ratio, Unit.COUNT), lq_from_log10(2.0 * ratio, Unit.BITS)

    def universe_ops_exponent_cubed(self) -> float:
        return 3.0 * math.log10(self.constants.t_U / self.constants.t_P)

    def universe_ops_per_bit(self, cubed: bool = True) -> LogQuantity:
        """Operations per holographic bit.

        With the cube exponent the ratio is t_U/t_P; with the squared budget
        that ``universe_budget`` uses it is one.
        """
        ops, bits = self.universe_budget()
        ops_log10 = self.universe_ops_exponent_cubed() if cubed else ops.log10
        return lq_from_log10(ops_log10 - bits.log10, Unit.COUNT)

    def condensate_state_info(self, mu: float, n: int) -> Dict[str, LogQuantity]:
        """Coherent condensate vs separable vs entangled cost of n particles"""
        d = self.electron_dimension().log10
        log_mu = math.log10(mu)
        return {
            "coherent": lq_from_log10(d + log_mu, Unit.BITS),
            "separable": lq_from_log10(math.log10(n) + d + log_mu, Unit.BITS),
            "entangled": lq_from_log10(n * d + log_mu, Unit.BITS),
        }

    def laptop_op_rate(self, mu: float, exponent: float, mass: float = 1.0) -> LogQuantity:
        """2^(mu/2) m c^2 / hbar times the laptop's 10^exponent amplitudes"""
        c = self.constants
        return lq_from_log10(
            0.5 * mu * LOG10_2 + math.log10(mass * c.c ** 2 / c.hbar) + exponent, Unit.OPS_PER_SEC
        )

    def laptop_evolution_budget(self, mu: float, exponent: Optional[float] = None) -> LogQuantity:
        """Seconds of laptop evolution the universe's total operations could pay for"""
        if exponent is None:
            exponent = self.laptop_particle_exponent()
        ops, _ = self.universe_budget()
        rate = self.laptop_op_rate(mu, exponent)
        return lq_from_log10(ops.log10 - rate.log10, Unit.SECONDS)

    def laptop_particle_exponent(self, mass: float = 1.0) -> float:
        """182 decades for each of 4 elementary particles per baryon"""
        baryons = mass / self.constants.m_p
        return BLACKBODY_DECADES * 4.0 * baryons

    def universe_photons(self, rho: float = 1e-27) -> float:
        volume = self.horizon_volume()
        return self.blackbody_photon_count(rho * volume, volume)

    # Reports

    def report_planck_cells(self) -> EstimateReport:
        return EstimateReport(
            "planck_cells", {"t_U": self.constants.t_U, "t_P": self.constants.t_P},
            "(4 pi / 3) (c t_U / l_P)^3", self.planck_cells(),
            lq_from_linear(2.8e181, Unit.COUNT),
        )

    def report_electron_dimension(self) -> EstimateReport:
        return EstimateReport(
            "electron_dimension", {"spin_states": 2}, "2 (4 pi / 3) (c t_U / l_P)^3",
            self.electron_dimension(), lq_from_log10(182, Unit.COUNT),
        )

    def report_electron_min_mu(self) -> EstimateReport:
        return EstimateReport(
            "electron_min_mu", {}, "log2(2 N)", lq_from_linear(self.electron_min_mu(), Unit.BITS),
            lq_from_linear(600, Unit.BITS),
            extras={"strict_completeness_mu": self.strict_completeness_mu()},
        )

    def report_electron_state_info(self, mu: float = 600) -> EstimateReport:
        return EstimateReport(
            "electron_state_info", {"mu": mu}, "2 N mu", self.electron_state_info(mu),
        )

    def report_electron_op_rate(self) -> EstimateReport:
        energy = self.constants.electron_rest_energy
        rate = resources.classical_op_rate(energy, self.constants)
        return EstimateReport(
            "electron_op_rate", {"E": energy}, "2 E / (pi hbar)",
            lq_from_linear(rate, Unit.OPS_PER_SEC), lq_from_linear(8.6e20, Unit.OPS_PER_SEC),
            inconsistency="published rate does not follow from 2E/(pi hbar) with standard hbar",
        )

    def report_electron_quantum_op_rate(self, mu: int = 64) -> EstimateReport:
        energy = self.constants.electron_rest_energy
        spec = SystemSpec(n=1, dims=2, energy_E=energy, mu=mu)
        return EstimateReport(
            "electron_quantum_op_rate", {"mu": mu, "D": 2, "E": energy}, "2^(mu/2) D n E / hbar",
            resources.quantum_op_rate(spec, self.constants), lq_from_linear(3e30, Unit.OPS_PER_SEC),
        )

    def report_electron_position_op_rate(self, mu: int = 600) -> EstimateReport:
        energy = self.constants.electron_rest_energy
        spec = SystemSpec(n=1, dims=1e182, energy_E=energy, mu=mu)
        return EstimateReport(
            "electron_position_op_rate", {"mu": mu, "D": 1e182, "E": energy}, "2^(mu/2) D n E / hbar",
            resources.quantum_op_rate(spec, self.constants), lq_from_log10(292, Unit.OPS_PER_SEC),
            inconsistency="published exponent matches h in place of hbar",
        )

    def report_laptop_state_info(self) -> EstimateReport:
        qubits = 1.0 / self.constants.m_p
        return EstimateReport(
            "laptop_state_info", {"mass": 1.0, "qubits": qubits}, "log10(M / mu) = n log10 2",
            lq_from_log10(qubits * LOG10_2), lq_from_log10(1.81e26), compare="exponent",
        )

    def report_laptop_particle_state_info(self) -> EstimateReport:
        return EstimateReport(
            "laptop_particle_state_info", {"mass": 1.0, "particles_per_baryon": 4},
            "log10(M / mu) = 182 * 4 / m_p", lq_from_log10(self.laptop_particle_exponent()),
            lq_from_log10(1.82e29), compare="exponent",
            inconsistency="published exponent is 182 * n rather than 182 * 4n",
        )

    def report_ultimate_laptop_photons(self) -> EstimateReport:
        n = self.blackbody_photon_count(1.0, 1e-3)
        return EstimateReport(
            "ultimate_laptop_photons", {"mass": 1.0, "volume": 1e-3},
            "(2 / 3 ln 2) (pi^2 V / 15 hbar^3 c^3)^(1/4) E^(3/4)",
            lq_from_linear(n, Unit.COUNT), lq_from_linear(1.6e31, Unit.COUNT),
        )

    def report_ultimate_laptop_state_info(self) -> EstimateReport:
        n = self.blackbody_photon_count(1.0, 1e-3)
        return EstimateReport(
            "ultimate_laptop_state_info", {"photons": n}, "log10(M / mu) = 182 n",
            lq_from_log10(BLACKBODY_DECADES * n), lq_from_log10(4.4e33), compare="exponent",
        )

    def report_universe_photons(self, rho: float = 1e-27) -> EstimateReport:
        return EstimateReport(
            "universe_photons", {"rho": rho, "volume": self.horizon_volume()},
            "(2 / 3 ln 2) (pi^2 V / 15 hbar^3 c^3)^(1/4) E^(3/4)",
            lq_from_linear(self.universe_photons(rho), Unit.COUNT), lq_from_log10(90, Unit.COUNT),
        )

    def report_universe_state_info(self, rho: float = 1e-27) -> EstimateReport:
        n = self.universe_photons(rho)
        return EstimateReport(
            "universe_state_info", {"photons": n}, "log10(M / mu) = 182 n",
            lq_from_log10(BLACKBODY_DECADES * n), lq_from_log10(1.82e92), compare="exponent",
        )

    def report_universe_op_rate(self, mu: int = 64, rho: float = 1e-27) -> EstimateReport:
        volume = self.horizon_volume()
        energy = rho * volume * self.constants.c ** 2
        exponent = BLACKBODY_DECADES * self.universe_photons(rho)
        log10_rate = 0.5 * mu * LOG10_2 + exponent + math.log10(energy / (math.pi * self.constants.hbar))
        return EstimateReport(
            "universe_op_rate", {"mu": mu, "E": energy}, "2^(mu/2) 10^(182 n) E / (pi hbar)",
            lq_from_log10(log10_rate, Unit.OPS_PER_SEC), lq_from_log10(100 + 1.82e92, Unit.OPS_PER_SEC),
            compare="exponent",
        )

    def report_universe_ops(self) -> EstimateReport:
        ops, _ = self.universe_budget()
        return EstimateReport(
            "universe_ops", {"t_U": self.constants.t_U, "t_P": self.constants.t_P}, "(t_U / t_P)^2",
            ops, lq_from_log10(120, Unit.COUNT),
            extras={
                "universe_ops_exponent": self.universe_ops_exponent_cubed(),
                "ops_per_bit_log10": self.universe_ops_per_bit(cubed=False).log10,
                "cubed_ops_per_bit_log10": self.universe_ops_per_bit().log10,
            },
        )

    def report_universe_bits(self) -> EstimateReport:
        _, bits = self.universe_budget()
        return EstimateReport(
            "universe_bits", {"t_U": self.constants.t_U, "l_P": self.constants.l_P}, "c^2 t_U^2 / l_P^2",
            bits, lq_from_log10(120, Unit.BITS),
            extras={"cubed_ops_per_bit_log10": self.universe_ops_per_bit().log10},
        )

    def report_laptop_evolution_budget(self, mu: int = 64) -> EstimateReport:
        budget = self.laptop_evolution_budget(mu)
        published = lq_from_log10(70 - 1.82e28 - 0.5 * mu * LOG10_2, Unit.SECONDS)
        return EstimateReport(
            "laptop_evolution_budget", {"mu": mu}, "(t_U / t_P)^2 / f_qn", budget, published, compare="exponent",
            inconsistency="published exponent drops a factor of ten from the laptop exponent",
        )

    def report_max_qubits_baryon_memory(self, mu: int = 64) -> EstimateReport:
        n = resources.max_objects_for_memory(lq_from_log10(76, Unit.BITS), mu, 2)
        return EstimateReport(
            "max_qubits_baryon_memory", {"M": "1e76", "mu": mu, "D": 2}, "log2(M / mu) / log2 D",
            lq_from_linear(n, Unit.COUNT), lq_from_linear(246, Unit.COUNT),
        )

    def report_max_qubits_holographic(self, mu: int = 64) -> EstimateReport:
        n = resources.max_objects_for_memory(lq_from_log10(120, Unit.BITS), mu, 2)
        return EstimateReport(
            "max_qubits_holographic", {"M": "1e120", "mu": mu, "D": 2}, "log2(M / mu) / log2 D",
            lq_from_linear(n, Unit.COUNT), lq_from_linear(398.6, Unit.COUNT),
            inconsistency="published count omits the division by mu",
        )

    def report_info_length_scale(self, mu: float = 1e12, rho: float = 1000.0) -> EstimateReport:
        lam = resources.info_length_scale(mu, rho, self.constants)
        derived = resources.info_length_scale(mu, rho, self.constants, derived=True)
        thermo = resources.info_length_scale_thermo(resources.memory_limit_completeness(mu), mu, rho, self.constants)
        return EstimateReport(
            "info_length_scale", {"mu": mu, "rho": rho}, "[mu m_p / (1274 ln10 rho)]^(1/3)",
            lq_from_linear(lam, Unit.METERS), lq_from_linear(1e-7, Unit.METERS),
            extras={
                "printed_coefficient": resources.info_length_coefficient(False),
                "derived_coefficient": resources.info_length_coefficient(True),
                "derived_length": derived,
                "thermodynamic_length": thermo,
            },
        )

    def report_unitary_phase_duration(self, mu: float = 1e12, rho: float = 1000.0) -> EstimateReport:
        lam = resources.info_length_scale(mu, rho, self.constants)
        tau = resources.unitary_phase_duration(lam, self.constants.c)
        return EstimateReport(
            "unitary_phase_duration", {"lambda_u": lam, "c_s": self.constants.c}, "lambda_u / c_s",
            lq_from_linear(tau, Unit.SECONDS), lq_from_linear(1e-16, Unit.SECONDS),
        )

    def report_thermal_spread(self, T: float = 300.0, t: float = 1e-16) -> EstimateReport:
        m_e = self.constants.m_e
        width = resources.thermal_wavepacket_width(m_e, T, self.constants)
        increment = resources.wavepacket_spread(width, m_e, t, self.constants) - width
        return EstimateReport(
            "thermal_spread", {"mass": m_e, "T": T, "t": t}, "h t / (m dx0), dx0 = h / sqrt(m k_B T)",
            lq_from_linear(increment, Unit.METERS), lq_from_linear(1e-11, Unit.METERS),
            extras={"initial_width": width},
        )

    def report_largest_coherent_object(self, mu: float = 1e12, dof_per_atom: float = 84) -> EstimateReport:
        atoms = self.largest_coherent_object(mu, dof_per_atom)
        return EstimateReport(
            "largest_coherent_object", {"mu": mu, "dof_per_atom": dof_per_atom}, "mu log10 2 / (2 * 182 dof)",
            lq_from_linear(atoms, Unit.COUNT), lq_from_linear(1e7, Unit.COUNT),
        )

    def report_coherent_molecule_mu(self, atoms: float = 1000, dof_per_atom: float = 50) -> EstimateReport:
        mu = self.mu_from_coherent_object(atoms, dof_per_atom)
        return EstimateReport(
            "coherent_molecule_mu", {"atoms": atoms, "dof_per_atom": dof_per_atom}, "2 * 182 dof n / log10 2",
            lq_from_linear(mu, Unit.BITS), lq_from_linear(6.0e7, Unit.BITS),
        )

    def report_cat_state_info(self, mass: float = 1.4, mean_atomic_number: float = 7, mu: float = 64,
                              dof_per_atom: float = 7) -> EstimateReport:
        value = self.object_state_info(mass, mean_atomic_number, mu, dof_per_atom)
        return EstimateReport(
            "cat_state_info", {"mass": mass, "N_a": mean_atomic_number, "dof_per_atom": dof_per_atom},
            "log10(M / mu) = 182 dof n, n = m / (2 N_a m_p)", value, lq_from_log10(1.2e29 + math.log10(mu), Unit.BITS),
            compare="exponent",
        )

    def report_condensate_state_info(self, mu: float = 64, n: int = 1000) -> EstimateReport:
        costs = self.condensate_state_info(mu, n)
        return EstimateReport(
            "condensate_state_info", {"mu": mu, "n": n}, "2 N mu",
            costs["coherent"], lq_from_log10(182 + math.log10(mu), Unit.BITS),
            extras={k: v.to_dict() for k, v in costs.items()},
        )

    # Dispatch

    def estimate(self, name: str, **params) -> EstimateReport:
        if name not in self.estimators:
            raise KeyError(f"Unknown estimate {name}")
        report = self.estimators[name](**params)
        if not report.within_agreement:
            if report.inconsistency:
                self.logger.warning(f"{name}: {report.agreement:.2f} decades from the published figure ({report.inconsistency})")
            else:
                self.logger.warning(f"{name}: {report.agreement:.2f} decades from the published figure")
        return report

    def estimate_all(self) -> List[EstimateReport]:
        return [self.estimate(name) for name in self.estimators]
