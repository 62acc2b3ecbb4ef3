"""End-to-end pipelines: SSVQE -> (state prep) -> SVQS sweep -> mitigation."""

from __future__ import annotations

import csv
import json
import time
import warnings
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import __version__
from ..ansatz import AnsatzSpec, SubspacePrepSpec, build_subspace_prep, ry_ops
from ..core import Circuit, NoiseModel, gate, run_circuit
from ..mitigation import AmplificationRule, amplify_circuit, extrapolate
from ..observables import (Observable, build_h2_hamiltonian, build_rabi_hamiltonian, diagonalize, expectation,
                           h2_coefficients, load_h2_table, occupancy_observable, sampled_expectation)
from ..ssvqe import SsvqeProblem, optimize, write_trace_csv
from ..stateprep import PrepObjective, h2_occupancy_objective, optimize_prep
from ..svqs import EvolutionPlan, SubspaceLeakageWarning, plan_from_ssvqe, build_extended_hamiltonian
from .config import ExperimentConfig, PrepConfig, defaulted_fields, resolve

TRAJECTORY_HEADER = ["t", "initial_state_id", "observable", "E_factor", "mean", "stderr", "mitigated"]
H2_OCCUPANCY_LABELS = ("occ_coupled", "occ_anticoupled")


def fmt(x: float) -> str:
    return f"{float(x):.17g}"


@dataclass
class RunManifest:
    kind: str
    output_dir: Path
    config: dict
    defaulted: dict
    status: str = "ok"
    ssvqe: dict = field(default_factory=dict)
    prep: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)
    files: dict[str, str] = field(default_factory=dict)
    timings: dict[str, float] = field(default_factory=dict)
    version: str = __version__

    @property
    def converged(self) -> bool:
        return self.status == "ok"

    def to_dict(self) -> dict:
        return {
            "version": self.version,
            "kind": self.kind,
            "status": self.status,
            "output_dir": str(self.output_dir.resolve()),
            "config": self.config,
            "defaulted": self.defaulted,
            "ssvqe": self.ssvqe,
            "prep": self.prep,
            **self.extra,
            "files": self.files,
            "timings": self.timings,
        }

    def write(self) -> Path:
        path = self.output_dir / "manifest.json"
        self.files["manifest"] = path.name
        path.write_text(json.dumps(self.to_dict(), indent=2, sort_keys=False) + "\n")
        return path


def _new_manifest(config: ExperimentConfig, out: Path) -> tuple[ExperimentConfig, RunManifest]:
    out.mkdir(parents=True, exist_ok=True)
    full = resolve(config)
    manifest = RunManifest(kind=config.kind, output_dir=out, config=full.model_dump(mode="json"),
                           defaulted=defaulted_fields(config, full))
    return full, manifest


# -- Hamiltonians --------------------------------------------------------------

def problem_hamiltonian(config: ExperimentConfig) -> Observable:
    h = config.hamiltonian
    if config.kind == "rabi":
        return build_rabi_hamiltonian(h.omega)
    if config.kind == "h2":
        table = load_h2_table(h.table) if h.table else None
        return build_h2_hamiltonian(h2_coefficients(h.distance, table))
    return Observable.from_dict(h.terms)


def total_hamiltonian(config: ExperimentConfig) -> Observable:
    """Rabi always carries one ancilla; custom problems carry ``ancillas``."""
    problem = problem_hamiltonian(config)
    ancillas = 1 if config.kind == "rabi" else config.hamiltonian.ancillas
    return build_extended_hamiltonian(problem, ancillas, config.hamiltonian.field)


# -- SSVQE stage -----------------------------------------------------------------

def run_ssvqe_stage(config: ExperimentConfig, hamiltonian: Observable, manifest: RunManifest):
    s = config.ssvqe
    problem = SsvqeProblem(hamiltonian, AnsatzSpec(hamiltonian.n_qubits, config.ansatz.depth), s.levels,
                           weights=tuple(s.weights) if s.weights else None, optimizer=s.optimizer,
                           seed=config.seed, restarts=s.restarts, max_iterations=s.max_iterations,
                           tolerance=s.tolerance)
    start = time.perf_counter()
    result = optimize(problem)
    manifest.timings["ssvqe"] = time.perf_counter() - start
    oracle = diagonalize(hamiltonian).eigenvalues[: s.levels]
    error = float(np.max(np.abs(result.energies - oracle)))
    converged = bool(result.converged and error <= s.energy_tolerance)
    trace_path = write_trace_csv(result, manifest.output_dir / "ssvqe_trace.csv")
    manifest.files["ssvqe_trace"] = trace_path.name
    manifest.ssvqe = {
        "energies": [float(e) for e in result.energies],
        "oracle_energies": [float(e) for e in oracle],
        "max_abs_error": error,
        "cost": result.cost,
        "weights": list(result.weights),
        "optimizer_converged": bool(result.converged),
        "converged": converged,
        "evaluations": result.n_evaluations,
        "restart_costs": result.restart_costs,
        "theta_star": [float(x) for x in result.theta_star],
    }
    if not converged:
        manifest.status = "not_converged"
    return result


# -- trajectory sweep -------------------------------------------------------------

@dataclass(frozen=True)
class Preparation:
    """A named input: ``circuit`` runs from |0...0>. ``encoded`` circuits
    already sit on the one-hot basis, so the encoder is skipped."""

    label: str
    circuit: Circuit
    encoded: bool = False


def rabi_preparation(i: int, n_qubits: int = 2) -> Preparation:
    return Preparation(str(i), Circuit(n_qubits, tuple(ry_ops(0, i * np.pi / 8))))


def bitstring_preparation(bits: str) -> Preparation:
    ops = tuple(gate("X", q) for q, b in enumerate(bits) if b == "1")
    return Preparation(bits, Circuit(len(bits), ops))


def _measure(obs: Observable, state, shots: int | None, seed: np.random.SeedSequence) -> tuple[float, float]:
    if shots is None:
        return expectation(obs, state), 0.0
    return sampled_expectation(obs, state, shots, np.random.default_rng(seed))


def sweep_trajectories(plan: EvolutionPlan, preparations: Sequence[Preparation],
                       observables: Mapping[str, Observable], times: Sequence[float], *, seed: int,
                       shots: int | None = None, noise: NoiseModel | None = None,
                       factors: Sequence[int] = (1,), mode: str = "identity") -> list[list[str]]:
    """Trajectory rows for every (input, t, observable, E) plus mitigated rows.

    Noisy runs use exact density matrices; shot noise is then drawn from a
    seed derived from (seed, input, t, E, observable) so every row is
    reproducible on its own.
    """
    rows = []
    labels = list(observables)
    for s, prep in enumerate(preparations):
        for k, t in enumerate(times):
            base = plan.encoded_circuit(prep.circuit, t) if prep.encoded else prep.circuit + plan.circuit(t)
            samples: dict[str, list[tuple[int, float, float]]] = {label: [] for label in labels}
            for e in factors:
                circuit = amplify_circuit(base, AmplificationRule(e, mode))
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore", SubspaceLeakageWarning)
                    state = run_circuit(circuit, noise=noise, mode="density" if noise and not noise.is_noiseless
                                        else "auto")
                for o, label in enumerate(labels):
                    mean, err = _measure(observables[label], state, shots,
                                         np.random.SeedSequence([seed, s, k, e, o]))
                    samples[label].append((e, mean, err))
            for label in labels:
                for e, mean, err in samples[label]:
                    rows.append([fmt(t), prep.label, label, str(e), fmt(mean), fmt(err), "0"])
                if len(factors) > 1:
                    est = extrapolate(samples[label])
                    rows.append([fmt(t), prep.label, label, "0", fmt(est.mitigated), fmt(est.stderr), "1"])
    return rows


def write_csv(path: Path, header: Sequence[str], rows: Sequence[Sequence[str]]) -> Path:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    return path


def _noise(config: ExperimentConfig) -> NoiseModel | None:
    n = config.noise
    model = NoiseModel(n.p1, n.p2, n.rz_noiseless)
    return None if model.is_noiseless else model


def _time_grid(config: ExperimentConfig) -> list[float]:
    return resolve(config).time_grid.values()


def _sweep_and_write(config: ExperimentConfig, plan: EvolutionPlan, preps: Sequence[Preparation],
                     observables: Mapping[str, Observable], manifest: RunManifest) -> None:
    start = time.perf_counter()
    rows = sweep_trajectories(plan, preps, observables, _time_grid(config), seed=config.seed, shots=config.shots,
                              noise=_noise(config), factors=config.mitigation.factors, mode=config.mitigation.mode)
    path = write_csv(manifest.output_dir / "trajectory.csv", TRAJECTORY_HEADER, rows)
    manifest.files["trajectory"] = path.name
    manifest.timings["sweep"] = time.perf_counter() - start


# -- pipelines ---------------------------------------------------------------------

def rabi_observables() -> dict[str, Observable]:
    out = {}
    for where, q in (("data", 0), ("anc", 1)):
        for p in "XYZ":
            out[f"{p}_{where}"] = Observable.pauli_on(p, q, 2)
    return out


def run_rabi(config: ExperimentConfig, out: Path) -> RunManifest:
    if config.kind != "rabi":
        raise ValueError(f"run_rabi needs kind 'rabi', got {config.kind!r}")
    config, manifest = _new_manifest(config, out)
    hamiltonian = total_hamiltonian(config)
    result = run_ssvqe_stage(config, hamiltonian, manifest)
    if manifest.converged:
        preps = [rabi_preparation(int(i)) for i in config.initial_states]
        _sweep_and_write(config, plan_from_ssvqe(result, hamiltonian), preps, rabi_observables(), manifest)
    manifest.write()
    return manifest


def _prep_objective(config: ExperimentConfig) -> tuple[PrepObjective, list[str]]:
    if config.prep is None or config.prep.objective == "h2_occupancy":
        return h2_occupancy_objective(), list(H2_OCCUPANCY_LABELS)
    targets = tuple((Observable.from_dict(t.observable), t.target) for t in config.prep.targets)
    return PrepObjective(targets), [f"value_{j + 1}" for j in range(len(targets))]


def run_prep_stage(config: ExperimentConfig, result, manifest: RunManifest) -> Preparation:
    objective, columns = _prep_objective(config)
    n = result.circuit.n_qubits
    spec = SubspacePrepSpec(n, config.ssvqe.levels)
    prep_cfg = config.prep or PrepConfig()
    start = time.perf_counter()
    prep = optimize_prep(objective, result.decoder(), spec, seed=config.seed, restarts=prep_cfg.restarts,
                         max_iterations=prep_cfg.max_iterations)
    manifest.timings["prep"] = time.perf_counter() - start
    rows = [[str(e.iteration), fmt(e.cost)] + [fmt(v) for v in e.values] for e in prep.trace]
    path = write_csv(manifest.output_dir / "prep_trace.csv", ["iteration", "cost"] + columns, rows)
    manifest.files["prep_trace"] = path.name
    manifest.prep = {
        "cost": prep.cost,
        "values": [float(v) for v in objective.values(prep.state.amplitudes)],
        "phi_star": [float(x) for x in prep.phi_star],
        "optimizer_converged": prep.converged,
        "restart_costs": prep.restart_costs,
    }
    circuit = Circuit(n, (gate("X", 0),)) + build_subspace_prep(spec).bind(prep.phi_star)
    return Preparation("prep", circuit, encoded=True)


def run_h2(config: ExperimentConfig, out: Path) -> RunManifest:
    if config.kind != "h2":
        raise ValueError(f"run_h2 needs kind 'h2', got {config.kind!r}")
    config, manifest = _new_manifest(config, out)
    hamiltonian = total_hamiltonian(config)
    result = run_ssvqe_stage(config, hamiltonian, manifest)
    if manifest.converged:
        prep = run_prep_stage(config, result, manifest)
        observables = {label: occupancy_observable(q) for q, label in enumerate(H2_OCCUPANCY_LABELS)}
        _sweep_and_write(config, plan_from_ssvqe(result, hamiltonian), [prep], observables, manifest)
    manifest.write()
    return manifest


def run_custom(config: ExperimentConfig, out: Path) -> RunManifest:
    config, manifest = _new_manifest(config, out)
    hamiltonian = total_hamiltonian(config)
    n = hamiltonian.n_qubits
    result = run_ssvqe_stage(config, hamiltonian, manifest)
    if manifest.converged:
        preps = []
        for label in config.initial_states:
            label = str(label)
            if label == "prep":
                preps.append(run_prep_stage(config, result, manifest))
            else:
                if len(label) != n or set(label) - {"0", "1"}:
                    raise ValueError(f"initial state {label!r} is not a {n}-bit string")
                preps.append(bitstring_preparation(label))
        names = config.observables or ["I" * q + "Z" + "I" * (n - q - 1) for q in range(n)]
        observables = {name: Observable.single(name) for name in names}
        _sweep_and_write(config, plan_from_ssvqe(result, hamiltonian), preps, observables, manifest)
    manifest.write()
    return manifest


def run_experiment(config: ExperimentConfig, out: Path) -> RunManifest:
    runner = {"rabi": run_rabi, "h2": run_h2, "custom": run_custom}[config.kind]
    return runner(config, out)


# -- spectrum sweep ---------------------------------------------------------------------

@dataclass(frozen=True)
class LevelCrossing:
    distance: float
    lower_level: int  # 1-based adiabatic labels of the two levels that swap
    upper_level: int


def find_level_crossings(distances: Sequence[float], eigenvalues: np.ndarray,
                         eigenvectors: Sequence[np.ndarray]) -> list[LevelCrossing]:
    """Crossings between adjacent sorted levels, detected by eigenvectors
    swapping order between neighbouring grid points.

    The location is the root of the linearly interpolated gap between the two
    diabatic curves.
    """
    crossings = []
    for i in range(len(distances) - 1):
        overlap = np.abs(eigenvectors[i].conj().T @ eigenvectors[i + 1]) ** 2
        for k in range(eigenvalues.shape[1] - 1):
            if overlap[k, k] < 0.5 and overlap[k, k + 1] > 0.5 and overlap[k + 1, k] > 0.5:
                before = eigenvalues[i, k] - eigenvalues[i, k + 1]
                after = eigenvalues[i + 1, k + 1] - eigenvalues[i + 1, k]
                d0, d1 = distances[i], distances[i + 1]
                frac = -before / (after - before) if after != before else 0.5
                crossings.append(LevelCrossing(float(d0 + frac * (d1 - d0)), k + 1, k + 2))
    return crossings


def run_spectrum_sweep(config: ExperimentConfig, out: Path) -> RunManifest:
    if config.kind != "h2":
        raise ValueError(f"spectrum sweeps need kind 'h2', got {config.kind!r}")
    config, manifest = _new_manifest(config, out)
    table = load_h2_table(config.hamiltonian.table) if config.hamiltonian.table else load_h2_table()
    lo, hi = config.spectrum.start, config.spectrum.stop
    records = [r for r in table if lo - 1e-9 <= r.distance <= hi + 1e-9]
    if not records:
        raise KeyError(f"coefficient table has no distances in [{lo}, {hi}]")
    start = time.perf_counter()
    distances, values, vectors = [], [], []
    for r in records:
        spec = diagonalize(build_h2_hamiltonian(r.coeffs))
        distances.append(r.distance)
        values.append(spec.eigenvalues)
        vectors.append(spec.eigenvectors)
    values = np.array(values)
    rows = [[fmt(d)] + [fmt(e) for e in row] for d, row in zip(distances, values)]
    path = write_csv(out / "spectrum.csv", ["distance"] + [f"E_{j + 1}" for j in range(values.shape[1])], rows)
    manifest.files["spectrum"] = path.name
    crossings = find_level_crossings(distances, values, vectors)
    relevant = [c for c in crossings if config.ssvqe.levels in (c.lower_level, c.upper_level)]
    manifest.extra["crossings"] = [c.__dict__ for c in crossings]
    manifest.extra["relevant_crossing"] = relevant[0].__dict__ if relevant else None
    manifest.timings["spectrum"] = time.perf_counter() - start
    manifest.write()
    return manifest
