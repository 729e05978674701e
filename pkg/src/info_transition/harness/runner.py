"""Scenario execution: dispatch by mode, seed-split trajectory ensembles, output writing."""
import asyncio
import logging
import math
import os
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from jinja2 import Template

from .. import __version__
from ..dynamics.hamiltonian import HamiltonianKind, HamiltonianSpec, evolve_unitary, x_chain_closed_form
from ..dynamics.lattice import (
    LatticeState,
    coherence_length,
    decohered_free_evolution,
    lindblad_position_generator,
    scattering_damping,
)
from ..dynamics.lindblad import lindblad_evolve, step_count
from ..estimators.calculator import EstimateCalculator, EstimateReport
from ..hilbert.analyzer import entanglement_entropy, factorize, von_neumann_entropy
from ..hilbert.state import DensityMatrix, PureState
from ..measurement.chain import premeasure
from ..measurement.trajectory import run_trajectory
from ..measurement.transition import (
    PreparedTransition,
    TransitionConfig,
    TransitionRecord,
    prepare_transition,
    state_information_of,
    transition_trigger,
)
from ..resources.constants import PhysicalConstants, UnitSystem, load_constants
from ..utils.config import Settings, get_settings
from ..utils.errors import InfoTransitionError, ScenarioError, StableSystemError, UndersampledError
from ..utils.rng import SeededRNG
from .scenario import RunManifest, Scenario, ScenarioMode, load_scenario, resolving
from .stats import born_chi_squared, outcome_counts, tau_u_histogram
from .storage import RunStore, read_manifest

TEMPLATE_DIR = Path(__file__).resolve().parent.parent / "templates"

# Spawn-key streams under the master seed
SETUP_STREAM = 0
TRAJECTORY_STREAM = 1

STATS_HEADER = ["section", "label", "observed", "expected", "value"]


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def load_template(name: str) -> Template:
    text = (TEMPLATE_DIR / name).read_text(encoding="utf-8")
    return Template(text, trim_blocks=True, lstrip_blocks=True, keep_trailing_newline=True)


def _format_magnitude(report: EstimateReport, value) -> str:
    if value is None:
        return "-"
    if report.compare == "exponent":
        return f"10^({value.log10:.4g})"
    return f"10^{value.log10:.3f}"


def render_estimate_table(reports: Sequence[EstimateReport], constants_version: str, units: str) -> str:
    rows = []
    for report in reports:
        if report.inconsistency:
            note = report.inconsistency
        elif not report.within_agreement:
            note = "outside agreement"
        else:
            note = ""
        rows.append({
            "name": report.name,
            "value": _format_magnitude(report, report.value),
            "published": _format_magnitude(report, report.published_value),
            "gap": "-" if report.agreement is None else f"{report.agreement:.2f}",
            "note": note,
        })
    return load_template("estimate_table.j2").render(
        rows=rows,
        constants_version=constants_version,
        units=units,
        flagged=sum(1 for r in reports if r.inconsistency),
        outside=sum(1 for r in reports if not r.within_agreement),
    )


def render_run_summary(manifest: RunManifest) -> str:
    return load_template("run_summary.j2").render(manifest=manifest.to_dict())


@dataclass
class RunContext:
    scenario: Scenario
    store: RunStore
    constants: PhysicalConstants
    manifest: RunManifest

    @property
    def seed(self) -> int:
        return self.manifest.master_seed


def _density_row(time: float, dims: Tuple[int, ...], mat: np.ndarray) -> Dict[str, Any]:
    rho = DensityMatrix(dims, mat)
    off = rho.mat - np.diag(np.diag(rho.mat))
    return {
        "time": float(time),
        "trace": float(np.real(np.trace(rho.mat))),
        "purity": rho.purity(),
        "entropy_bits": von_neumann_entropy(rho),
        "populations": [float(p) for p in np.real(np.diag(rho.mat))],
        "coherence_l1": float(np.sum(np.abs(off))),
    }


def _lattice_row(time: float, state: LatticeState, reference: Optional[LatticeState] = None) -> Dict[str, Any]:
    row = {"time": float(time), **state.to_dict()}
    if reference is not None:
        row["closed_form_deviation"] = float(np.max(np.abs(state.rho - reference.rho)))
    return row


class ScenarioRunner:
    """Runs scenarios and writes their outputs.

    Constants given to the constructor win over a scenario's own
    ``constants_path``; without either the settings path and then the
    built-in table are used.
    """

    def __init__(
        self,
        settings: Optional[Settings] = None,
        constants: Optional[PhysicalConstants] = None,
        max_workers: Optional[int] = None,
    ):
        self.settings = settings or get_settings()
        self.constants = constants
        self.max_workers = max_workers or self.settings.max_workers
        self.logger = logging.getLogger(__name__)

    def _constants_for(self, scenario: Scenario) -> PhysicalConstants:
        if self.constants is not None:
            return self.constants
        return load_constants(scenario.constants_path)

    def _units_for(self, scenario: Scenario) -> UnitSystem:
        """Estimates are always SI; other modes fall back to the natural_units setting when the scenario is silent"""
        if scenario.mode == ScenarioMode.ESTIMATE:
            return UnitSystem.SI
        if "units" in scenario.model_fields_set:
            return scenario.units
        return UnitSystem.NATURAL if self.settings.natural_units else UnitSystem.SI

    def _transition_config(self, scenario: Scenario) -> TransitionConfig:
        return scenario.transition.to_config(
            scenario.seed, self.settings.default_mu, self.settings.separability_tol
        )

    async def run(
        self,
        scenario: Scenario,
        out_dir: str,
        seed: Optional[int] = None,
        scenario_path: Optional[str] = None,
        scenario_digest: Optional[str] = None,
        unit_system: Optional[UnitSystem] = None,
    ) -> RunManifest:
        update: Dict[str, Any] = {"units": unit_system or self._units_for(scenario)}
        if seed is not None:
            update["seed"] = seed
        scenario = scenario.model_copy(update=update)
        constants = self._constants_for(scenario)
        units = scenario.units.value
        store = RunStore(out_dir, {"units": units, "constants_version": constants.version})
        manifest = RunManifest(
            scenario_id=scenario.id,
            mode=scenario.mode.value,
            tool_version=__version__,
            constants_version=constants.version,
            units=units,
            master_seed=scenario.seed,
            started_at=_now(),
            scenario_path=scenario_path,
            scenario_digest=scenario_digest,
        )
        ctx = RunContext(scenario, store, constants, manifest)
        self.logger.info(f"Running scenario {scenario.id} ({scenario.mode.value}) with seed {scenario.seed} into {out_dir}")
        try:
            manifest.summary = await self.run_mode(ctx)
        except InfoTransitionError as e:
            self.logger.error(f"Scenario {scenario.id} failed: {e}")
            raise
        manifest.outputs = dict(sorted(store.digests.items()))
        manifest.finished_at = _now()
        store.write_manifest(scenario.outputs.manifest, manifest.to_dict())
        self.logger.info(f"Scenario {scenario.id} completed with {len(manifest.outputs)} outputs")
        return manifest

    async def run_mode(self, ctx: RunContext) -> Dict[str, Any]:
        mode = ctx.scenario.mode
        if mode == ScenarioMode.ESTIMATE:
            return await asyncio.to_thread(self.run_estimate, ctx)
        elif mode == ScenarioMode.SIMULATE:
            return await asyncio.to_thread(self.run_simulate, ctx)
        elif mode == ScenarioMode.LINDBLAD:
            return await asyncio.to_thread(self.run_lindblad, ctx)
        elif mode == ScenarioMode.LATTICE:
            return await asyncio.to_thread(self.run_lattice, ctx)
        elif mode == ScenarioMode.MEASURE:
            return await self.run_measure(ctx)
        raise ScenarioError(f"Unknown mode: {mode}")

    # Estimate

    def run_estimate(self, ctx: RunContext) -> Dict[str, Any]:
        selection = ctx.scenario.estimates
        calculator = EstimateCalculator(ctx.constants)
        names = list(calculator.estimators) if "all" in selection.names else selection.names
        reports = []
        for name in names:
            with resolving(f"estimate {name}"):
                reports.append(calculator.estimate(name, **selection.params.get(name, {})))
        outputs = ctx.scenario.outputs
        ctx.store.write_jsonl(outputs.records, (r.to_dict() for r in reports), "estimate-report")
        ctx.store.write_text(
            outputs.table, render_estimate_table(reports, ctx.constants.version, ctx.scenario.units.value)
        )
        return {
            "estimates": len(reports),
            "flagged": [r.name for r in reports if r.inconsistency],
            "outside_agreement": [r.name for r in reports if not r.within_agreement],
        }

    # Unitary evolution

    def run_simulate(self, ctx: RunContext) -> Dict[str, Any]:
        scenario = ctx.scenario
        if scenario.trajectory_count > 1:
            self.logger.warning("Unitary simulation is deterministic; trajectory_count is ignored")
        state0 = scenario.initial_state.to_state()
        H = scenario.hamiltonian.to_spec(scenario.units, ctx.constants)
        if math.prod(H.dims) != state0.dim:
            raise ScenarioError(f"Hamiltonian dims {H.dims} do not match initial state dims {state0.dims}")
        cfg = self._transition_config(scenario) if scenario.transition else None
        mu = cfg.mu if cfg else self.settings.default_mu
        tol = cfg.separability_tol if cfg else self.settings.separability_tol
        evolution = scenario.evolution
        compare_closed_form = H.kind == HamiltonianKind.X_CHAIN and abs(abs(state0.amps[0]) - 1.0) < 1e-12

        rows = []
        for t in np.linspace(0.0, evolution.t_total, evolution.samples + 1):
            state = evolve_unitary(state0, H, float(t))
            structure = factorize(state, tol)
            row = {
                "time": float(t),
                "blocks": [list(b) for b in structure.blocks],
                "largest_block": list(structure.largest_block),
                "state_information": state_information_of(structure, mu).to_dict(),
                "entropy_first_bits": entanglement_entropy(state, [0]) if state.n > 1 else 0.0,
            }
            if cfg is not None:
                verdict, _ = transition_trigger(state, cfg, structure)
                row["stable"] = verdict.stable
                row["margin_log10"] = verdict.margin_log10
            if compare_closed_form:
                closed = x_chain_closed_form(H.params["omegas"], float(t))
                row["closed_form_fidelity"] = float(abs(closed.overlap(state)) ** 2)
            rows.append(row)
            if evolution.t_total == 0:
                break
        ctx.store.write_jsonl(scenario.outputs.records, rows, "unitary-sample")
        return {"samples": len(rows), "final_largest_block": rows[-1]["largest_block"]}

    # Open-system evolution

    def run_lindblad(self, ctx: RunContext) -> Dict[str, Any]:
        scenario = ctx.scenario
        H = scenario.hamiltonian.to_spec(scenario.units, ctx.constants)
        spec = scenario.lindblad.to_spec(H)
        dims = H.dims
        with resolving("initial density"):
            initial = scenario.lindblad.initial_matrix()
            if initial is not None:
                rho0 = DensityMatrix(dims, initial)
            else:
                state0 = scenario.initial_state.to_state()
                if state0.dim != spec.dim:
                    raise ScenarioError(f"Initial state dims {state0.dims} do not match Hamiltonian dims {dims}")
                rho0 = DensityMatrix(dims, state0.density().mat)

        evolution = scenario.evolution
        steps = step_count(evolution.t_total, evolution.dt)
        stride = max(1, steps // evolution.samples)
        rows = [_density_row(0.0, dims, rho0.mat)]

        def observe(step: int, time: float, mat: np.ndarray) -> None:
            if step % stride == 0 or step == steps:
                rows.append(_density_row(time, dims, mat))

        final = lindblad_evolve(rho0, spec, evolution.t_total, evolution.dt, observer=observe)
        ctx.store.write_jsonl(scenario.outputs.records, rows, "density-sample")
        return {"steps": steps, "samples": len(rows), "final_purity": final.purity()}

    # Position-space decoherence

    def run_lattice(self, ctx: RunContext) -> Dict[str, Any]:
        scenario = ctx.scenario
        lattice = scenario.lattice
        evolution = scenario.evolution
        state = initial = lattice.initial_state()
        mass = lattice.effective_mass
        generator = None
        if lattice.method == "lindblad":
            generator = lindblad_position_generator(
                lattice.Lambda, mass, lattice.n_points, lattice.dx, scenario.units, ctx.constants
            )
        # no kinetic term: the closed-form damping is exact
        pure_damping = math.isinf(mass)

        rows = [_lattice_row(0.0, state, initial if pure_damping else None)]
        if evolution.t_total > 0:
            segment = evolution.t_total / evolution.samples
            dt = min(evolution.dt, segment)
            for k in range(1, evolution.samples + 1):
                if generator is None:
                    state = decohered_free_evolution(
                        state, mass, lattice.Lambda, segment, dt, scenario.units, ctx.constants
                    )
                else:
                    rho = lindblad_evolve(state.to_density(), generator, segment, dt)
                    state = LatticeState.from_density(state.positions, rho)
                t = k * segment
                reference = scattering_damping(initial, lattice.Lambda, t) if pure_damping else None
                rows.append(_lattice_row(t, state, reference))
        outputs = scenario.outputs
        ctx.store.write_jsonl(outputs.records, rows, "lattice-sample")
        ctx.store.write_lattice_csv(outputs.snapshot, state)
        return {
            "samples": len(rows),
            "initial_coherence_length": rows[0]["coherence_length"],
            "final_coherence_length": coherence_length(state),
        }

    # Measurement ensembles

    async def run_measure(self, ctx: RunContext) -> Dict[str, Any]:
        scenario = ctx.scenario
        cfg = self._transition_config(scenario)
        setup_rng = SeededRNG(ctx.seed, (SETUP_STREAM,))
        system = scenario.initial_state.to_state()
        chain = scenario.chain.to_spec(setup_rng) if scenario.chain else None
        with resolving("measured state"):
            initial = premeasure(system, chain) if chain else system
        H = None
        if scenario.hamiltonian is not None:
            H = scenario.hamiltonian.to_spec(scenario.units, ctx.constants)
            if math.prod(H.dims) != initial.dim:
                raise ScenarioError(f"Hamiltonian dims {H.dims} do not match measured state dims {initial.dims}")
        evolving = H is not None and scenario.evolution.t_total > 0
        prepared = None if evolving else self._prepare_measurement(initial, cfg, scenario)

        n = scenario.trajectory_count
        streams = SeededRNG(ctx.seed, (TRAJECTORY_STREAM,)).spawn(n)
        ctx.manifest.trajectory_seeds = [
            {"index": i, "spawn_key": list(rng.spawn_key), "child_seed": rng.child_seed()}
            for i, rng in enumerate(streams)
        ]
        batches = [b for b in np.array_split(np.arange(n), min(self.max_workers, n)) if b.size]
        self.logger.info(f"Measuring {n} trajectories in {len(batches)} batches (evolving={evolving})")
        results = await asyncio.gather(*(
            asyncio.to_thread(self._measure_batch, [int(i) for i in batch], streams, initial, cfg, H, scenario, prepared)
            for batch in batches
        ))
        per_trajectory: Dict[int, List[TransitionRecord]] = {}
        for batch in results:
            per_trajectory.update(batch)
        trajectories = [per_trajectory[i] for i in range(n)]

        outputs = scenario.outputs
        ctx.store.write_jsonl(
            outputs.records,
            (
                {"trajectory": i, "index": j, **record.to_dict()}
                for i, records in enumerate(trajectories)
                for j, record in enumerate(records)
            ),
            "transition-record",
        )
        stats_rows, summary = self._measure_stats(trajectories, prepared)
        ctx.store.write_csv(outputs.stats, STATS_HEADER, stats_rows)
        summary.update({
            "trajectories": n,
            "transitions": sum(len(r) for r in trajectories),
            "forced_transitions": sum(record.forced for records in trajectories for record in records),
        })
        return summary

    def _prepare_measurement(self, initial: PureState, cfg: TransitionConfig, scenario: Scenario) -> PreparedTransition:
        """Trigger and basis for single-shot measurement; a stable state is refused unless the scenario forces it"""
        prepared = prepare_transition(initial, cfg)
        if prepared.verdict.stable:
            if not scenario.transition.force:
                raise StableSystemError(
                    f"Measured state is computationally stable (margin 10^{prepared.verdict.margin_log10:.3f}); "
                    "set transition.force to measure it anyway"
                )
            self.logger.info(f"Measured state is stable; every transition of {scenario.id} is recorded as forced")
        return prepared

    def _measure_batch(
        self,
        indices: List[int],
        streams: List[SeededRNG],
        initial: PureState,
        cfg: TransitionConfig,
        H: Optional[HamiltonianSpec],
        scenario: Scenario,
        prepared: Optional[PreparedTransition],
    ) -> Dict[int, List[TransitionRecord]]:
        out = {}
        for i in indices:
            rng = streams[i]
            if prepared is not None:
                out[i] = [prepared.fire(0.0, rng, forced=prepared.verdict.stable)[1]]
            else:
                evolution = scenario.evolution
                out[i] = run_trajectory(initial, H, cfg, evolution.t_total, evolution.dt, rng).records
        return out

    def _measure_stats(
        self, trajectories: List[List[TransitionRecord]], prepared: Optional[PreparedTransition]
    ) -> Tuple[List[List[Any]], Dict[str, Any]]:
        rows: List[List[Any]] = []
        summary: Dict[str, Any] = {}
        if prepared is not None:
            expected = prepared.born_probabilities
            first = [records[0] for records in trajectories if records]
            counts = outcome_counts(first)
            n = len(first)
            for outcome, p in sorted(expected.items()):
                rows.append(["born_counts", outcome, counts.get(outcome, 0), n * p, p])
            summary["born_expected"] = {str(k): p for k, p in sorted(expected.items())}
            try:
                statistic, p_value = born_chi_squared(first, expected)
                rows.append(["born_test", "statistic", None, None, statistic])
                rows.append(["born_test", "p_value", None, None, p_value])
                rows.append(["born_test", "dof", None, None, len(expected) - 1])
                summary.update({"chi_squared": statistic, "p_value": p_value})
            except UndersampledError as e:
                self.logger.warning(f"Skipping Born chi-squared test: {e}")
        histogram = tau_u_histogram(trajectories)
        for k, count in enumerate(histogram["counts"]):
            rows.append(["tau_u_histogram", f"{histogram['edges'][k]!r}:{histogram['edges'][k + 1]!r}", count, None, None])
        for key in ("n", "mean", "variance"):
            rows.append(["tau_u_summary", key, None, None, histogram[key]])
        summary["tau_u_mean"] = histogram["mean"]
        return rows, summary

    # Replay

    async def replay(self, manifest_path: str, out_dir: str) -> Tuple[RunManifest, List[str]]:
        """Re-run the scenario behind a manifest and list the outputs whose digest changed"""
        original = RunManifest.from_dict(read_manifest(manifest_path))
        if not original.scenario_path:
            raise ScenarioError(f"Manifest {manifest_path} does not name its scenario file")
        scenario, digest = load_scenario(original.scenario_path)
        if original.scenario_digest and digest != original.scenario_digest:
            raise ScenarioError(f"Scenario {original.scenario_path} changed since the recorded run")
        manifest = await self.run(
            scenario, out_dir, original.master_seed, original.scenario_path, digest, UnitSystem(original.units)
        )
        names = sorted(set(original.outputs) | set(manifest.outputs))
        mismatches = [name for name in names if original.outputs.get(name) != manifest.outputs.get(name)]
        if mismatches:
            self.logger.error(f"Replay of {original.scenario_id} differs in {mismatches}")
        else:
            self.logger.info(f"Replay of {original.scenario_id} reproduced {len(names)} outputs byte-for-byte")
        return manifest, mismatches


def run_scenario(
    path: str,
    out_dir: Optional[str] = None,
    seed: Optional[int] = None,
    settings: Optional[Settings] = None,
    constants: Optional[PhysicalConstants] = None,
    max_workers: Optional[int] = None,
) -> RunManifest:
    """Load, run and persist one scenario file; the default output directory is <output_dir>/<scenario id>"""
    scenario, digest = load_scenario(path)
    runner = ScenarioRunner(settings, constants, max_workers)
    out_dir = out_dir or os.path.join(runner.settings.output_dir, scenario.id)
    return asyncio.run(runner.run(scenario, out_dir, seed, os.path.abspath(path), digest))


def replay_manifest(
    manifest_path: str,
    out_dir: str,
    settings: Optional[Settings] = None,
    constants: Optional[PhysicalConstants] = None,
) -> Tuple[RunManifest, List[str]]:
    runner = ScenarioRunner(settings, constants)
    return asyncio.run(runner.replay(manifest_path, out_dir))
