import pytest
import sys
import os
import math
from unittest.mock import Mock, patch

import numpy as np
from scipy.linalg import expm

# Add src to path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..', 'src'))

from info_transition.dynamics.hamiltonian import (
    HamiltonianKind,
    HamiltonianSpec,
    evolve_unitary,
    flip_time,
    laplacian_matrix,
    propagator,
    x_chain_closed_form,
    x_chain_phases,
)
from info_transition.dynamics.lattice import (
    LatticeState,
    coherence_length,
    decohered_free_evolution,
    lindblad_position_generator,
    max_stable_step,
    scattering_damping,
)
from info_transition.dynamics.lindblad import (
    LindbladSpec,
    dissipator,
    lindblad_evolve,
    purify,
    step_count,
)
from info_transition.hilbert.analyzer import entanglement_entropy
from info_transition.hilbert.state import DensityMatrix, PureState, partial_trace
from info_transition.resources.constants import UnitSystem
from info_transition.utils.config import Settings
from info_transition.utils.errors import (
    CapacityExceededError,
    DimensionMismatchError,
    NonHermitianError,
    NumericalWatchdogError,
    StepBoundError,
)

NATURAL = UnitSystem.NATURAL


def random_hermitian(gen, size, scale=1.0):
    a = gen.normal(size=(size, size)) + 1j * gen.normal(size=(size, size))
    h = 0.5 * (a + a.conj().T)
    return scale * h / np.max(np.abs(np.linalg.eigvalsh(h)))


def random_state(gen, dims):
    size = math.prod(dims)
    return PureState.from_amplitudes(dims, gen.normal(size=size) + 1j * gen.normal(size=size))


class TestHamiltonianSpec:

    def test_dense_shape_checks(self):
        """Dense matrices must be square and match the declared dims"""
        with pytest.raises(DimensionMismatchError):
            HamiltonianSpec.dense(np.zeros((2, 3)))
        with pytest.raises(DimensionMismatchError):
            HamiltonianSpec.dense(np.eye(4), dims=(2, 3))

    def test_non_hermitian_rejected(self):
        """Materialization refuses non-Hermitian matrices"""
        spec = HamiltonianSpec.dense(np.array([[0, 1], [0, 0]]), units=NATURAL)
        with pytest.raises(NonHermitianError):
            spec.materialize()
        with pytest.raises(NonHermitianError):
            evolve_unitary(PureState.basis((2,), 0), spec, 1.0)

    def test_qubit_flip_energies(self):
        """Eigenvalues of the flip potential are E0 and E1"""
        spec = HamiltonianSpec.qubit_flip(1.0, 3.0, NATURAL)
        assert np.allclose(np.linalg.eigvalsh(spec.materialize()), [1.0, 3.0])
        assert spec.mean_energy() == 2.0
        assert spec.energy_spread() == 1.0
        with pytest.raises(ValueError):
            HamiltonianSpec.qubit_flip(2.0, 1.0)

    def test_kind_specific_accessors(self):
        """Energy accessors only exist for the flip potential"""
        spec = HamiltonianSpec.x_chain([1.0], NATURAL)
        with pytest.raises(ValueError):
            spec.mean_energy()

    def test_x_chain_matrix_capacity(self):
        """Dense x_chain matrices are limited to 2048 dimensions"""
        with pytest.raises(CapacityExceededError):
            HamiltonianSpec.x_chain([1.0] * 12, NATURAL).materialize()

    def test_dense_capacity_follows_settings(self):
        """max_density_dim from the settings caps every materialized Hamiltonian"""
        settings = Settings(_env_file=None, max_density_dim=4)
        with patch('info_transition.hilbert.state.get_settings', return_value=settings):
            assert HamiltonianSpec.x_chain([1.0, 0.5], NATURAL).materialize().shape == (4, 4)
            with pytest.raises(CapacityExceededError):
                HamiltonianSpec.x_chain([1.0, 0.5, 0.25], NATURAL).materialize()
            with pytest.raises(CapacityExceededError):
                HamiltonianSpec.free_particle(1.0, 5, 0.5, NATURAL).materialize()

    def test_free_particle_kinetic_operator(self):
        """H = -(hbar^2 / 2m) Laplacian on the lattice"""
        spec = HamiltonianSpec.free_particle(2.0, 5, 0.5, NATURAL)
        expected = -(1.0 / 4.0) * laplacian_matrix(5, 0.5)
        assert np.allclose(spec.materialize(), expected)
        assert spec.kind == HamiltonianKind.FREE_PARTICLE

    def test_dict_form(self):
        """Dense matrices serialise as (re, im) pairs and read back"""
        gen = np.random.default_rng(1)
        spec = HamiltonianSpec.dense(random_hermitian(gen, 3), units=NATURAL)
        data = spec.to_dict()
        assert data["kind"] == "dense"
        assert data["units"] == "natural"
        restored = HamiltonianSpec.from_dict(data)
        assert np.allclose(restored.materialize(), spec.materialize())
        chain = HamiltonianSpec.from_dict({"kind": "x_chain", "params": {"omegas": [1.0, 2.0]}})
        assert chain.dims == (2, 2)


class TestUnitaryEvolution:

    def test_zero_time_is_identity(self):
        """t = 0 returns the input state"""
        state = PureState.from_amplitudes((2,), [1, 1j])
        spec = HamiltonianSpec.qubit_flip(0.0, 1.0, NATURAL)
        assert evolve_unitary(state, spec, 0.0) is state

    def test_qubit_flip_time(self):
        """After pi hbar / (2 dE) the flip potential takes |0> to |1>"""
        spec = HamiltonianSpec.qubit_flip(1.0, 3.0)
        t = flip_time(spec)
        assert t == pytest.approx(math.pi * spec.hbar / 2.0)
        flipped = evolve_unitary(PureState.basis((2,), 0), spec, t)
        assert abs(flipped.amps[1]) == pytest.approx(1.0, abs=1e-10)

    def test_matches_matrix_exponential(self):
        """Spectral propagation agrees with scipy's expm on a random 3-level system"""
        gen = np.random.default_rng(42)
        H = random_hermitian(gen, 3)
        spec = HamiltonianSpec.dense(H, units=NATURAL)
        state = random_state(gen, (3,))
        evolved = evolve_unitary(state, spec, 1.7)
        oracle = expm(-1j * H * 1.7) @ state.amps
        assert abs(np.vdot(oracle, evolved.amps)) ** 2 >= 1 - 1e-10

    def test_norm_and_overlaps_preserved(self):
        """Unitary evolution preserves norms and pairwise overlaps"""
        gen = np.random.default_rng(9)
        spec = HamiltonianSpec.dense(random_hermitian(gen, 4), units=NATURAL)
        a, b = random_state(gen, (4,)), random_state(gen, (4,))
        U = propagator(spec, 2.3)
        ua = U @ a.amps
        ub = U @ b.amps
        assert np.linalg.norm(ua) == pytest.approx(1.0, abs=1e-12)
        assert abs(np.vdot(ua, ub) - a.overlap(b)) < 1e-10

    def test_local_hamiltonian_keeps_entanglement(self, bell_state):
        """A Hamiltonian acting on one qubit leaves the Bell entropy at one bit"""
        gen = np.random.default_rng(4)
        H = np.kron(random_hermitian(gen, 2), np.eye(2))
        evolved = evolve_unitary(bell_state, HamiltonianSpec.dense(H, (2, 2), NATURAL), 0.9)
        assert entanglement_entropy(evolved, [0]) == pytest.approx(1.0, abs=1e-9)

    def test_dims_must_match(self, bell_state):
        """A qubit Hamiltonian cannot evolve a pair"""
        with pytest.raises(DimensionMismatchError):
            evolve_unitary(bell_state, HamiltonianSpec.qubit_flip(0.0, 1.0), 1.0)


class TestXChain:

    @pytest.mark.parametrize("n", [1, 2, 3, 4, 5, 6])
    def test_closed_form_matches_dense_propagator(self, n):
        """Parity-phase closed form equals exp(-iHt)|0...0> for the X-string chain"""
        gen = np.random.default_rng(n)
        omegas = list(gen.uniform(0.2, 2.0, size=n))
        spec = HamiltonianSpec.x_chain(omegas, NATURAL)
        t = 0.77
        dense = evolve_unitary(PureState.basis((2,) * n, 0), spec, t)
        closed = x_chain_closed_form(omegas, t)
        assert abs(closed.overlap(dense)) ** 2 >= 1 - 1e-10

    def test_single_qubit_phases(self):
        """n = 1 reduces to the two phases exp(-+ i omega t)"""
        phases = x_chain_phases([2.0], 0.5)
        assert np.allclose(phases, np.exp(-1j * np.array([1.0, -1.0])) / math.sqrt(2))

    def test_entanglement_grows(self):
        """Two qubits with different frequencies entangle from a product start"""
        omegas = [1.0, 0.4]
        assert entanglement_entropy(x_chain_closed_form(omegas, 0.0), [0]) == pytest.approx(0.0, abs=1e-9)
        assert entanglement_entropy(x_chain_closed_form(omegas, 1.0), [0]) > 0.5

    def test_closed_form_capacity(self):
        """More than 12 qubits are refused"""
        with pytest.raises(CapacityExceededError):
            x_chain_phases([1.0] * 13, 1.0)
        with pytest.raises(ValueError):
            x_chain_phases([], 1.0)


class TestLindblad:

    def test_collapse_operator_shape(self):
        """Collapse operators must match the Hamiltonian dimension"""
        H0 = HamiltonianSpec.qubit_flip(0.0, 1.0, NATURAL)
        with pytest.raises(DimensionMismatchError):
            LindbladSpec(H0, [np.eye(3)])

    def test_step_count(self):
        """Steps are the ceiling of t / dt; a step longer than t is refused"""
        assert step_count(1.0, 0.3) == 4
        assert step_count(1.0, 0.25) == 4
        assert step_count(0.0, 0.1) == 0
        with pytest.raises(ValueError):
            step_count(0.1, 1.0)
        with pytest.raises(ValueError):
            step_count(1.0, 0.0)

    def test_closed_system_matches_unitary(self):
        """Without collapse operators the integrator reproduces exact unitary evolution"""
        gen = np.random.default_rng(12)
        H = random_hermitian(gen, 3)
        spec = HamiltonianSpec.dense(H, units=NATURAL)
        state = random_state(gen, (3,))
        rho = lindblad_evolve(state.density(), LindbladSpec(spec), 1.0, 0.005)
        exact = evolve_unitary(state, spec, 1.0).density()
        assert np.max(np.abs(rho.mat - exact.mat)) < 1e-8

    def test_dephasing_analytic_solution(self):
        """|+> under L = sqrt(0.2) sigma_z keeps populations and loses coherence as exp(-0.4 t)"""
        H0 = HamiltonianSpec.dense(np.diag([0.5, -0.5]), units=NATURAL)
        L = math.sqrt(0.2) * np.diag([1.0, -1.0])
        rho0 = PureState.from_amplitudes((2,), [1, 1]).density()
        times = []

        def observer(step, time, mat):
            times.append(time)
            expected = 0.5 * np.exp(-1j * time) * math.exp(-0.4 * time)
            assert abs(mat[0, 1] - expected) < 1e-6
            assert abs(mat[0, 0] - 0.5) < 1e-12

        final = lindblad_evolve(rho0, LindbladSpec(H0, [L]), 5.0, 0.01, observer=observer)
        assert len(times) == 500
        assert times[-1] == pytest.approx(5.0)
        assert abs(np.trace(final.mat) - 1.0) < 5e-8
        assert final.purity() < rho0.purity()

    def test_amplitude_damping(self):
        """Excited population decays as exp(-gamma t) under L = sqrt(gamma) sigma_minus"""
        gamma = 0.5
        H0 = HamiltonianSpec.dense(np.zeros((2, 2)), units=NATURAL)
        L = math.sqrt(gamma) * np.array([[0, 1], [0, 0]])
        rho = lindblad_evolve(PureState.basis((2,), 1).density(), LindbladSpec(H0, [L]), 2.0, 0.01)
        assert rho.mat[1, 1].real == pytest.approx(math.exp(-gamma * 2.0), abs=1e-6)
        assert rho.mat[0, 0].real == pytest.approx(1 - math.exp(-gamma * 2.0), abs=1e-6)

    def test_hermitian_positive_trace_preserving(self):
        """Random generators keep the state Hermitian, positive and of unit trace"""
        gen = np.random.default_rng(21)
        spec = LindbladSpec(
            HamiltonianSpec.dense(random_hermitian(gen, 3), units=NATURAL),
            [0.3 * (gen.normal(size=(3, 3)) + 1j * gen.normal(size=(3, 3))) for _ in range(2)],
        )
        rho = lindblad_evolve(random_state(gen, (3,)).density(), spec, 2.0, 0.005)
        assert np.max(np.abs(rho.mat - rho.mat.conj().T)) < 1e-10
        assert abs(np.trace(rho.mat) - 1.0) < 2e-8
        assert rho.eigenvalues().min() >= -1e-6

    def test_trace_watchdog(self):
        """A step that leaks trace aborts the run"""
        H0 = HamiltonianSpec.qubit_flip(0.0, 1.0, NATURAL)
        leaky = Mock(side_effect=lambda H, ops, rho, dt, hbar: rho * 1.001)
        with patch('info_transition.dynamics.lindblad._rk4_step', leaky):
            with pytest.raises(NumericalWatchdogError) as excinfo:
                lindblad_evolve(PureState.basis((2,), 0).density(), LindbladSpec(H0), 1.0, 0.1)
        assert leaky.call_count == 1
        assert excinfo.value.exit_code == 3

    def test_dimension_mismatch(self):
        """A qubit density cannot be driven by a qutrit generator"""
        spec = LindbladSpec(HamiltonianSpec.dense(np.eye(3), units=NATURAL))
        with pytest.raises(DimensionMismatchError):
            lindblad_evolve(PureState.basis((2,), 0).density(), spec, 1.0, 0.1)

    def test_purification_marginal(self):
        """Tracing out the ancilla of a purification recovers rho"""
        rho = DensityMatrix((2,), np.array([[0.7, 0.2j], [-0.2j, 0.3]]))
        psi = purify(rho)
        state = PureState.from_amplitudes((2, 2), psi)
        assert np.allclose(partial_trace(state.density(), [0]).mat, rho.mat, atol=1e-12)

    def test_double_commutator_identity(self):
        """For Hermitian L the dissipator is the double commutator [L, [L, rho]]"""
        gen = np.random.default_rng(8)
        L = np.diag(gen.normal(size=4)).astype(complex)
        rho = random_state(gen, (4,)).density().mat
        inner = L @ rho - rho @ L
        assert np.max(np.abs(dissipator(L, rho) - (L @ inner - inner @ L))) < 1e-12


class TestLatticeState:

    def test_gaussian_normalization_and_width(self):
        """Packet probabilities sum to one and their spread is sigma"""
        state = LatticeState.gaussian(64, 0.25, 1.0)
        assert state.trace() == pytest.approx(1.0)
        assert state.probabilities().sum() == pytest.approx(1.0)
        assert state.width() == pytest.approx(1.0, rel=1e-3)

    def test_validation(self):
        """Uneven grids and wrong traces are refused"""
        with pytest.raises(ValueError):
            LatticeState(np.array([0.0, 1.0, 3.0]), np.eye(3) / 3)
        with pytest.raises(ValueError):
            LatticeState(np.array([0.0, 1.0]), np.eye(2))
        with pytest.raises(DimensionMismatchError):
            LatticeState(np.array([0.0]), np.eye(1))

    def test_density_round_trip(self):
        """Lattice normalization and density-matrix normalization convert into each other"""
        state = LatticeState.gaussian(16, 0.5, 1.0, wavenumber=0.3)
        rho = state.to_density()
        assert np.trace(rho.mat).real == pytest.approx(1.0)
        back = LatticeState.from_density(state.positions, rho)
        assert np.allclose(back.rho, state.rho)

    def test_snapshot_rows(self):
        """CSV rows enumerate every (x, x') pair"""
        state = LatticeState.gaussian(4, 1.0, 1.0)
        rows = list(state.iter_rows())
        assert len(rows) == 16
        assert rows[0][:2] == (-1.5, -1.5)
        assert set(state.to_dict()) == {"n_points", "dx", "trace", "width", "coherence_length"}


class TestScatteringDecoherence:

    def test_damping_is_elementwise_gaussian(self):
        """rho(x, x') picks up exp(-Lambda t (x - x')^2) and the diagonal is untouched"""
        state = LatticeState.gaussian(16, 0.5, 1.0)
        damped = scattering_damping(state, 0.3, 2.0)
        factor = np.exp(-0.6 * state.separation_matrix())
        assert np.max(np.abs(damped.rho - state.rho * factor)) < 1e-12
        assert np.allclose(np.diag(damped.rho), np.diag(state.rho), atol=1e-15)
        assert np.all(np.abs(damped.rho) <= np.abs(state.rho) + 1e-15)

    def test_ln2_halves_element(self):
        """Lambda t (x - x')^2 = ln 2 halves the coherence"""
        state = LatticeState.gaussian(8, 1.0, 2.0)
        damped = scattering_damping(state, math.log(2.0), 1.0)
        assert damped.rho[3, 4] == pytest.approx(0.5 * state.rho[3, 4], abs=1e-12)

    def test_damping_composes(self):
        """Damping for t1 then t2 equals damping for t1 + t2"""
        state = LatticeState.gaussian(16, 0.5, 1.0)
        twice = scattering_damping(scattering_damping(state, 0.2, 0.7), 0.2, 1.1)
        once = scattering_damping(state, 0.2, 1.8)
        assert np.max(np.abs(twice.rho - once.rho)) < 1e-12

    def test_infinite_mass_matches_damping(self):
        """Without the kinetic term the integrator reproduces the closed form"""
        state = LatticeState.gaussian(16, 0.5, 1.0)
        evolved = decohered_free_evolution(state, math.inf, 0.05, 1.0, 0.01, NATURAL)
        assert np.max(np.abs(evolved.rho - scattering_damping(state, 0.05, 1.0).rho)) < 1e-6

    def test_free_spreading_matches_gaussian_law(self):
        """Lambda = 0: width grows as sqrt(sigma^2 + (hbar t / 2 m sigma)^2) within 10 percent"""
        state = LatticeState.gaussian(64, 0.25, 1.0)
        evolved = decohered_free_evolution(state, 1.0, 0.0, 1.0, 0.01, NATURAL)
        expected = math.sqrt(1.0 + 0.25)
        growth = evolved.width() - state.width()
        assert growth == pytest.approx(expected - 1.0, rel=0.1)
        assert evolved.trace() == pytest.approx(1.0, abs=1e-6)

    def test_coherence_length_shrinks_under_strong_scattering(self):
        """Strong scattering drives the coherence length down monotonically"""
        state = LatticeState.gaussian(32, 0.5, 2.0)
        lengths = [coherence_length(state)]
        for _ in range(5):
            state = decohered_free_evolution(state, 1.0, 5.0, 0.1, 0.002, NATURAL)
            lengths.append(coherence_length(state))
        assert all(b < a for a, b in zip(lengths, lengths[1:]))

    def test_step_bound(self):
        """Steps above the explicit stability bound are refused"""
        state = LatticeState.gaussian(16, 0.5, 1.0)
        bound = max_stable_step(state, 1.0, 0.0, 1.0)
        assert bound == pytest.approx(2.5 / 8.0)
        with pytest.raises(StepBoundError):
            decohered_free_evolution(state, 1.0, 0.0, 1.0, 0.5, NATURAL)

    def test_lindblad_generator_matches_direct_integration(self):
        """L = sqrt(2 Lambda) x with a free-particle H0 reproduces the lattice equation on 16 points"""
        state = LatticeState.gaussian(16, 1.0, 2.0, wavenumber=0.2)
        generator = lindblad_position_generator(0.05, 1.0, 16, 1.0, NATURAL)
        assert len(generator.collapse_ops) == 1
        rho = lindblad_evolve(state.to_density(), generator, 1.0, 0.01)
        via_lindblad = LatticeState.from_density(state.positions, rho)
        direct = decohered_free_evolution(state, 1.0, 0.05, 1.0, 0.01, NATURAL)
        assert np.max(np.abs(via_lindblad.rho - direct.rho)) < 1e-5

    def test_zero_lambda_generator_is_free(self):
        """Lambda = 0 leaves only the free-particle Hamiltonian"""
        generator = lindblad_position_generator(0.0, 1.0, 8, 1.0, NATURAL)
        assert generator.collapse_ops == []
        with pytest.raises(ValueError):
            lindblad_position_generator(-1.0, 1.0, 8, 1.0)
