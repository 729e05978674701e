import pytest
import sys
import os
import json
import math

# Add src to path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', 'src'))

from info_transition.magnitude.quantity import Unit, lq_from_linear, lq_from_log10
from info_transition.resources.calculator import (
    Scenario,
    SystemSpec,
    chaos_timescale,
    classical_op_rate,
    clock_rate,
    completeness_ok,
    correlation_length,
    info_length_coefficient,
    info_length_scale,
    info_length_scale_thermo,
    max_entangled_objects,
    max_objects_for_memory,
    memory_limit_chaos,
    memory_limit_completeness,
    quantum_op_rate,
    stability_check,
    state_information,
    thermal_spread_increment,
    thermal_wavepacket_width,
    unitary_phase_duration,
    wavepacket_spread,
)
from info_transition.resources.constants import (
    DEFAULT_CONSTANTS,
    PhysicalConstants,
    UnitSystem,
    hbar_for,
    load_constants,
)
from info_transition.utils.errors import ScenarioError

LOG10_2 = math.log10(2.0)


class TestSystemSpec:

    def test_validation(self):
        """n, energies, mu and dims are range-checked"""
        with pytest.raises(ValueError):
            SystemSpec(n=0, dims=2, energy_E=1.0)
        with pytest.raises(ValueError):
            SystemSpec(n=1, dims=2, energy_E=-1.0)
        with pytest.raises(ValueError):
            SystemSpec(n=1, dims=2, energy_E=1.0, mu=7)
        with pytest.raises(ValueError):
            SystemSpec(n=2, dims=(2, 3, 4), energy_E=1.0)

    def test_heterogeneous_dims(self):
        """Per-object dimensions multiply and add as given"""
        spec = SystemSpec(n=3, dims=(2, 3, 4), energy_E=1.0)
        assert spec.log10_dim_product() == pytest.approx(math.log10(24))
        assert spec.log10_dim_sum() == pytest.approx(math.log10(9))
        assert spec.to_dict()["dims"] == [2.0, 3.0, 4.0]


class TestStateInformation:

    def test_entangled_vs_separable(self):
        """mu D^n for entangled systems, mu n D for separable ones"""
        entangled = state_information(SystemSpec(n=10, dims=2, energy_E=1.0, mu=64))
        separable = state_information(SystemSpec(n=10, dims=2, energy_E=1.0, mu=64, separable=True))
        assert entangled.unit == Unit.BITS
        assert entangled.to_linear() == pytest.approx(64 * 2 ** 10)
        assert separable.to_linear() == pytest.approx(64 * 20)

    @pytest.mark.parametrize("n,D", [(2, 2), (3, 3), (5, 4), (40, 2)])
    def test_entangled_always_exceeds_separable(self, n, D):
        """D^n > n D whenever n >= 2 and D >= 2"""
        entangled = state_information(SystemSpec(n=n, dims=D, energy_E=1.0))
        separable = state_information(SystemSpec(n=n, dims=D, energy_E=1.0, separable=True))
        assert entangled > separable

    def test_astronomical_dimension(self):
        """Electron position dimension 10^182 stays in log space"""
        value = state_information(SystemSpec(n=1, dims=1e182, energy_E=1.0, mu=600))
        assert value.log10 == pytest.approx(182 + math.log10(600))


class TestOperationRates:

    def test_classical_op_rate_unit_energy(self):
        """E = pi hbar / 2 flips once per second"""
        assert classical_op_rate(math.pi * DEFAULT_CONSTANTS.hbar / 2) == pytest.approx(1.0)
        with pytest.raises(ValueError):
            classical_op_rate(0.0)

    def test_electron_classical_rate(self, constants):
        """Electron rest energy gives about 4.9e20 flips per second"""
        assert classical_op_rate(constants.electron_rest_energy, constants) == pytest.approx(4.94e20, rel=0.01)

    def test_quantum_rate_electron_spin(self, constants):
        """Electron spin at mu=64 runs about 6.7e30 op/s"""
        spec = SystemSpec(n=1, dims=2, energy_E=constants.electron_rest_energy, mu=64)
        rate = quantum_op_rate(spec, constants)
        assert rate.unit == Unit.OPS_PER_SEC
        assert rate.to_linear() == pytest.approx(6.67e30, rel=0.01)

    def test_quantum_rate_electron_position(self, constants):
        """D = 1e182 at mu = 600 gives about 10^293.2 op/s"""
        spec = SystemSpec(n=1, dims=1e182, energy_E=constants.electron_rest_energy, mu=600)
        assert quantum_op_rate(spec, constants).log10 == pytest.approx(293.2, abs=0.05)

    @pytest.mark.parametrize("mu,D,n", [(8, 2, 1), (64, 3, 4), (600, 4, 10)])
    def test_quantum_to_classical_ratio(self, mu, D, n):
        """quantum / classical = pi 2^(mu/2) D^n n / 2"""
        E = 1e-13
        spec = SystemSpec(n=n, dims=D, energy_E=E, mu=mu)
        ratio = quantum_op_rate(spec).log10 - math.log10(classical_op_rate(E))
        expected = math.log10(math.pi / 2) + 0.5 * mu * LOG10_2 + n * math.log10(D) + math.log10(n)
        assert ratio == pytest.approx(expected, abs=1e-9)

    def test_clock_rate_unit_case(self):
        """n=1, mu=4, E=hbar gives one op per second per bit"""
        spec = SystemSpec(n=1, dims=2, energy_E=DEFAULT_CONSTANTS.hbar, mu=4)
        rate = clock_rate(spec)
        assert rate.unit == Unit.OPS_PER_SEC_PER_BIT
        assert rate.to_linear() == pytest.approx(1.0)

    def test_chaos_timescale(self):
        """hbar / (n J): one second for J = hbar, halved by doubling n"""
        hbar = DEFAULT_CONSTANTS.hbar
        assert chaos_timescale(1, hbar) == pytest.approx(1.0)
        assert chaos_timescale(2, hbar) == pytest.approx(0.5)
        assert chaos_timescale(10, 1e-24) == pytest.approx(1.05e-11, rel=0.01)
        with pytest.raises(ValueError):
            chaos_timescale(0, 1.0)


class TestMemoryLimits:

    def test_chaos_limit(self):
        """M1 = 2^(mu/2) E / J = 1024 * 10 at mu=20"""
        assert memory_limit_chaos(10.0, 1.0, 20).to_linear() == pytest.approx(10240)

    def test_completeness_limit(self):
        """M2 = mu 2^(mu/2) = 16 at mu=4"""
        assert memory_limit_completeness(4).to_linear() == pytest.approx(16)

    @pytest.mark.parametrize("mu", [8, 16, 64])
    def test_limit_ratio(self, mu):
        """M1 / M2 = E / (mu J)"""
        E, J = 3.5, 0.25
        ratio = memory_limit_chaos(E, J, mu).log10 - memory_limit_completeness(mu).log10
        assert ratio == pytest.approx(math.log10(E / (mu * J)), abs=1e-9)


class TestStabilityCheck:

    def test_completeness_boundary(self):
        """33 qubits at mu=64 are unstable; 32 sit exactly on the limit and are stable"""
        unstable = stability_check(SystemSpec(n=33, dims=2, energy_E=1.0, mu=64), Scenario.COMPLETENESS)
        stable = stability_check(SystemSpec(n=32, dims=2, energy_E=1.0, mu=64), Scenario.COMPLETENESS)
        assert not unstable.stable
        assert stable.stable
        assert stable.margin_log10 == pytest.approx(0.0, abs=1e-9)

    @pytest.mark.parametrize("mu", [8, 16, 64, 600])
    @pytest.mark.parametrize("D", [2, 3, 4])
    def test_verdict_flips_after_max_objects(self, mu, D):
        """Stable at n_max, unstable at n_max + 1"""
        n_max = max_entangled_objects(mu, D)
        at_max = stability_check(SystemSpec(n=n_max, dims=D, energy_E=1.0, mu=mu), "completeness")
        beyond = stability_check(SystemSpec(n=n_max + 1, dims=D, energy_E=1.0, mu=mu), "completeness")
        assert at_max.stable
        assert not beyond.stable

    def test_separable_judged_per_object(self):
        """A separable system is as stable as its largest object"""
        spec = SystemSpec(n=100, dims=2, energy_E=1.0, mu=64, separable=True)
        assert stability_check(spec, Scenario.COMPLETENESS).stable

    def test_explicit_threshold(self):
        """Explicit mode compares mu D^n with the given bits"""
        spec = SystemSpec(n=4, dims=2, energy_E=1.0, mu=64)
        assert stability_check(spec, Scenario.EXPLICIT, threshold=lq_from_linear(1024)).stable
        verdict = stability_check(spec, Scenario.EXPLICIT, threshold=lq_from_linear(512, Unit.BITS))
        assert not verdict.stable
        assert verdict.to_dict()["scenario"] == "explicit"
        with pytest.raises(ValueError):
            stability_check(spec, Scenario.EXPLICIT)

    def test_chaos_scenario_limit_is_m1(self):
        """With omega_chi = n J / hbar the chaos limit is 2^(mu/2) E / J"""
        spec = SystemSpec(n=4, dims=2, energy_E=10.0, coupling_J=1.0, mu=20)
        verdict = stability_check(spec, Scenario.CHAOS)
        assert verdict.limit.log10 == pytest.approx(memory_limit_chaos(10.0, 1.0, 20).log10, abs=1e-9)
        assert verdict.required.to_linear() == pytest.approx(20 * 16)
        assert verdict.stable

    def test_chaos_exponent_override(self):
        """A code-rate exponent above one raises the requirement"""
        spec = SystemSpec(n=4, dims=2, energy_E=10.0, mu=20)
        assert not stability_check(spec, Scenario.CHAOS, x=2.0).stable


class TestCapacity:

    def test_max_entangled_objects(self):
        """mu / (2 log2 D) objects fit under the completeness limit"""
        assert max_entangled_objects(64, 2) == 32
        assert max_entangled_objects(600, 2) == 300
        with pytest.raises(ValueError):
            max_entangled_objects(64, 1)

    def test_max_objects_for_memory(self):
        """log2(M / mu) qubits fit into M bits"""
        holographic = max_objects_for_memory(lq_from_log10(120, Unit.BITS), 64, 2)
        baryon = max_objects_for_memory(lq_from_log10(76, Unit.BITS), 64, 2)
        assert holographic == pytest.approx(392.6, abs=0.1)
        assert baryon == pytest.approx(246.5, abs=1.0)

    def test_completeness_ok(self):
        """A single D-level system needs mu >= 2 log2 D"""
        assert completeness_ok(2 ** 32, 64)
        assert not completeness_ok(2 ** 33, 64)


class TestLengthScales:

    def test_info_length_scale(self, constants):
        """Water-density matter at mu=1e12 stays coherent below about 1e-7 m"""
        lam = info_length_scale(1e12, 1000.0, constants)
        assert 5e-8 <= lam <= 2e-7
        assert lam == pytest.approx(8.3e-8, rel=0.02)

    def test_info_length_scaling_laws(self):
        """lambda_u goes as mu^(1/3) and rho^(-1/3)"""
        base = info_length_scale(1e12, 1000.0)
        assert info_length_scale(8e12, 1000.0) / base == pytest.approx(2.0)
        assert info_length_scale(1e12, 8000.0) / base == pytest.approx(0.5)

    def test_derived_coefficient_carries_ln2(self):
        """The derived coefficient is the printed one divided by ln 2"""
        assert info_length_coefficient(True) == pytest.approx(info_length_coefficient(False) / math.log(2))
        assert info_length_coefficient(False) == pytest.approx(1274 * math.log(10))
        assert info_length_scale(1e12, 1000.0, derived=True) < info_length_scale(1e12, 1000.0)

    def test_thermodynamic_length_positive(self):
        """Blackbody route gives a finite positive length"""
        lam = info_length_scale_thermo(memory_limit_completeness(64), 64, 1000.0)
        assert lam > 0
        with pytest.raises(ValueError):
            info_length_scale_thermo(memory_limit_completeness(64), 64, 0.0)

    def test_unitary_phase_duration(self, constants):
        """tau_u = lambda_u / c is about 2.8e-16 s"""
        tau = unitary_phase_duration(info_length_scale(1e12, 1000.0, constants), constants.c)
        assert 1.6e-16 <= tau <= 7e-16
        assert tau == pytest.approx(2.77e-16, rel=0.02)

    def test_thermal_spread(self, constants):
        """An electron packet at 300 K spreads by no more than 1e-11 m in 1e-16 s"""
        width = thermal_wavepacket_width(constants.m_e, 300.0, constants)
        increment = wavepacket_spread(width, constants.m_e, 1e-16, constants) - width
        assert increment <= 1e-11
        assert increment == pytest.approx(6.7e-12, rel=0.02)
        assert thermal_spread_increment(constants.m_e, 300.0, 1e-16, constants) == pytest.approx(increment)

    def test_correlation_length(self):
        """The shorter of the two lengths wins"""
        assert correlation_length(1e-9, 1e-7) == 1e-9
        with pytest.raises(ValueError):
            correlation_length(0.0, 1.0)


class TestConstants:

    def test_defaults(self, constants):
        """Derived constants follow from the table"""
        assert constants.l_P == pytest.approx(constants.c * constants.t_P)
        assert constants.electron_rest_energy == pytest.approx(8.187e-14, rel=1e-3)

    def test_frozen(self, constants):
        """The table is immutable; overrides build a copy"""
        with pytest.raises(Exception):
            constants.hbar = 1.0
        changed = constants.with_overrides(t_U=4.3e17)
        assert changed.t_U == 4.3e17
        assert constants.t_U == 1e17

    def test_hbar_for_units(self, constants):
        """Natural units set hbar to one"""
        assert hbar_for(UnitSystem.NATURAL) == 1.0
        assert hbar_for(UnitSystem.SI, constants) == constants.hbar

    def test_load_from_json(self, tmp_path):
        """A partial table keeps defaults for missing entries"""
        path = tmp_path / "constants.json"
        path.write_text(json.dumps({"schema": "info-transition/constants/1", "version": "test/1", "t_U": 4.3e17}))
        loaded = load_constants(str(path))
        assert loaded.version == "test/1"
        assert loaded.t_U == 4.3e17
        assert loaded.hbar == DEFAULT_CONSTANTS.hbar

    def test_load_without_path_uses_defaults(self, monkeypatch):
        """No explicit or configured path falls back to the built-in table"""
        monkeypatch.delenv("INFO_TRANSITION_CONSTANTS", raising=False)
        monkeypatch.delenv("INFO_TRANSITION_CONSTANTS_PATH", raising=False)
        from info_transition.utils import config
        monkeypatch.setattr(config, "default_settings", None)
        assert load_constants() == DEFAULT_CONSTANTS

    def test_bad_table_is_scenario_error(self, tmp_path):
        """Unknown keys and unreadable files surface as ScenarioError"""
        path = tmp_path / "constants.json"
        path.write_text(json.dumps({"planck_mass": 2.2e-8}))
        with pytest.raises(ScenarioError):
            load_constants(str(path))
        with pytest.raises(ScenarioError):
            load_constants(str(tmp_path / "missing.json"))

    def test_round_trip_file(self, tmp_path, constants):
        """to_json writes a table from_json reads back"""
        path = tmp_path / "table.json"
        constants.to_json(str(path))
        assert PhysicalConstants.from_json(str(path)) == constants
