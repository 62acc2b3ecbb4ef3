"""Weighted subspace-search eigensolver.

One circuit U(theta) is optimised so that the one-hot inputs X_j|0...0>
land on the l lowest eigenstates; the cost is the weighted energy sum
sum_j w_j <phi_j|U^dag H U|phi_j> with w strictly decreasing in j.
"""

from __future__ import annotations

import csv
import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy.optimize import minimize

from .ansatz import AnsatzSpec, build_ansatz, one_hot_indices, random_parameters
from .core import Circuit, GateKind, StateVector, run_batch
from .observables import Observable, SpectrumResult

SEQUENTIAL = "sequential"
QUASI_NEWTON = "bfgs"
FD_STEP = 1e-5
DEGENERATE_AMPLITUDE = 1e-12


def default_weights(levels: int) -> tuple[float, ...]:
    return tuple(float(levels - j) for j in range(levels))


@dataclass(frozen=True, eq=False)
class SsvqeProblem:
    hamiltonian: Observable
    ansatz: AnsatzSpec
    levels: int
    weights: tuple[float, ...] | None = None
    optimizer: str = SEQUENTIAL
    seed: int = 0
    restarts: int = 8
    max_iterations: int = 500
    tolerance: float = 1e-12

    def __post_init__(self):
        n = self.ansatz.n_qubits
        if self.hamiltonian.n_qubits != n:
            raise ValueError(f"Hamiltonian acts on {self.hamiltonian.n_qubits} qubits, ansatz on {n}")
        if not 1 <= self.levels <= n:
            raise ValueError(f"levels must be in 1..{n} (one-hot inputs), got {self.levels}")
        weights = default_weights(self.levels) if self.weights is None else tuple(float(w) for w in self.weights)
        if len(weights) != self.levels:
            raise ValueError(f"need {self.levels} weights, got {len(weights)}")
        if any(w <= 0 for w in weights):
            raise ValueError("weights must be positive")
        if any(a <= b for a, b in zip(weights, weights[1:])):
            raise ValueError(f"weights must be strictly decreasing, got {weights}")
        object.__setattr__(self, "weights", weights)
        if self.optimizer not in (SEQUENTIAL, QUASI_NEWTON):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")

    @cached_property
    def circuit(self) -> Circuit:
        return build_ansatz(self.ansatz)

    @cached_property
    def inputs(self) -> np.ndarray:
        """(2^n, l) matrix whose columns are the one-hot input states."""
        n = self.ansatz.n_qubits
        cols = np.zeros((2**n, self.levels), dtype=complex)
        for j, idx in enumerate(one_hot_indices(n, self.levels)):
            cols[idx, j] = 1
        return cols

    def input_state(self, j: int) -> StateVector:
        return StateVector(self.inputs[:, j])


@dataclass(frozen=True)
class TraceEntry:
    iteration: int
    cost: float
    energies: tuple[float, ...]


@dataclass(frozen=True, eq=False)
class SsvqeResult:
    theta_star: np.ndarray
    energies: np.ndarray
    weights: tuple[float, ...]
    cost: float
    trace: list[TraceEntry]
    converged: bool
    n_evaluations: int
    restart_costs: list[float] = field(default_factory=list)
    circuit: Circuit | None = None

    def decoder(self) -> Circuit:
        """U(theta*) with every parameter bound."""
        return self.circuit.bind(self.theta_star)

    def unitary(self) -> np.ndarray:
        return self.circuit.unitary(self.theta_star)


def level_energies(problem: SsvqeProblem, theta: Sequence[float]) -> np.ndarray:
    outs = run_batch(problem.circuit, theta, problem.inputs)
    h = problem.hamiltonian.matrix
    return np.real(np.einsum("ij,ik,kj->j", outs.conj(), h, outs))


def weighted_cost(problem: SsvqeProblem, theta: Sequence[float]) -> tuple[float, np.ndarray]:
    theta = np.asarray(theta, dtype=float)
    if theta.size != problem.circuit.num_parameters:
        raise ValueError(f"theta has {theta.size} entries, ansatz needs {problem.circuit.num_parameters}")
    energies = level_energies(problem, theta)
    return float(np.dot(problem.weights, energies)), energies


def _fit_sinusoid(f0: np.ndarray, fplus: np.ndarray, fminus: np.ndarray):
    """f(x) = a + p cos x + q sin x from samples at x = 0, +pi/2, -pi/2."""
    a = (fplus + fminus) / 2
    q = (fplus - fminus) / 2
    p = f0 - a
    return a, p, q


def sequential_sinusoidal_step(problem: SsvqeProblem, theta: np.ndarray, slot: int,
                               current: np.ndarray | None = None) -> tuple[np.ndarray, np.ndarray, int]:
    """Set one RZ angle to the analytic minimiser of the weighted cost.

    The per-level energies are each exactly a + p cos(x) + q sin(x) in the
    shift x of the chosen slot, so two extra evaluations (x = +-pi/2) plus the
    current point determine the whole curve. Returns the new theta, the
    per-level energies there and the number of cost evaluations spent.
    """
    positions = problem.circuit.parameter_slots.get(slot)
    if positions is None:
        raise IndexError(f"slot {slot} does not exist")
    if len(positions) != 1 or problem.circuit.ops[positions[0]].kind is not GateKind.RZ:
        raise ValueError("sequential sinusoidal updates need each slot on exactly one RZ gate")
    theta = np.array(theta, dtype=float)
    evals = 0
    if current is None:
        current = level_energies(problem, theta)
        evals += 1
    shifted = theta.copy()
    shifted[slot] = theta[slot] + np.pi / 2
    e_plus = level_energies(problem, shifted)
    shifted[slot] = theta[slot] - np.pi / 2
    e_minus = level_energies(problem, shifted)
    evals += 2

    w = np.asarray(problem.weights)
    a, p, q = _fit_sinusoid(current, e_plus, e_minus)
    pc, qc = float(w @ p), float(w @ q)
    if math.hypot(pc, qc) < DEGENERATE_AMPLITUDE:
        return theta, current, evals
    x = math.atan2(-qc, -pc)
    theta[slot] = math.remainder(theta[slot] + x, 2 * np.pi) % (2 * np.pi)
    return theta, a + p * math.cos(x) + q * math.sin(x), evals


def _run_sequential(problem: SsvqeProblem, theta: np.ndarray):
    energies = level_energies(problem, theta)
    evals = 1
    w = np.asarray(problem.weights)
    cost = float(w @ energies)
    trace = [TraceEntry(0, cost, tuple(energies))]
    converged = False
    step = 0
    for _ in range(problem.max_iterations):
        sweep_start = cost
        for slot in range(theta.size):
            theta, energies, n = sequential_sinusoidal_step(problem, theta, slot, energies)
            evals += n
            step += 1
            cost = float(w @ energies)
            trace.append(TraceEntry(step, cost, tuple(energies)))
        if sweep_start - cost < problem.tolerance:
            converged = True
            break
    return theta, trace, converged, evals


def _run_bfgs(problem: SsvqeProblem, theta: np.ndarray):
    counter = {"evals": 0}

    def fun(x):
        counter["evals"] += 1
        return weighted_cost(problem, x)[0]

    trace: list[TraceEntry] = []

    def record(x):
        c, e = weighted_cost(problem, x)
        trace.append(TraceEntry(len(trace), c, tuple(e)))

    record(theta)
    res = minimize(fun, theta, jac=lambda x: central_gradient(fun, x), method="BFGS",
                   callback=record, options={"maxiter": problem.max_iterations, "gtol": 1e-9})
    return np.mod(res.x, 2 * np.pi), trace, bool(res.success), counter["evals"]


def central_gradient(fun, x: np.ndarray, step: float = FD_STEP) -> np.ndarray:
    grad = np.empty_like(x, dtype=float)
    for i in range(x.size):
        e = np.zeros_like(x, dtype=float)
        e[i] = step
        grad[i] = (fun(x + e) - fun(x - e)) / (2 * step)
    return grad


def optimize(problem: SsvqeProblem) -> SsvqeResult:
    """Best of ``problem.restarts`` random starts (uniform on [0, 2 pi))."""
    rng = np.random.default_rng(problem.seed)
    run = _run_sequential if problem.optimizer == SEQUENTIAL else _run_bfgs
    best = None
    restart_costs = []
    total_evals = 0
    for _ in range(problem.restarts):
        theta0 = random_parameters(problem.circuit.num_parameters, rng)
        theta, trace, converged, evals = run(problem, theta0)
        total_evals += evals
        cost, energies = weighted_cost(problem, theta)
        restart_costs.append(cost)
        if best is None or cost < best[1]:
            best = (theta, cost, energies, trace, converged)
    theta, cost, energies, trace, converged = best
    return SsvqeResult(theta_star=theta, energies=energies, weights=problem.weights, cost=cost, trace=trace,
                       converged=converged, n_evaluations=total_evals, restart_costs=restart_costs,
                       circuit=problem.circuit)


def output_states(problem: SsvqeProblem, theta: Sequence[float]) -> np.ndarray:
    """Columns U(theta)|phi_j>."""
    return run_batch(problem.circuit, theta, problem.inputs)


def measure_phase_offsets(unitary: np.ndarray, oracle: SpectrumResult, levels: int) -> np.ndarray:
    """delta_j = arg <E_j|U|phi_j> against the oracle eigenvectors.

    Only meaningful in simulation; raises if an overlap magnitude is below
    0.99, which means U has not actually reached the eigenstate.
    """
    n = int(np.log2(unitary.shape[0]))
    deltas = []
    for j, idx in enumerate(one_hot_indices(n, levels)):
        overlap = np.vdot(oracle.eigenvectors[:, j], unitary[:, idx])
        if abs(overlap) < 0.99:
            raise ValueError(f"level {j + 1}: overlap {abs(overlap):.4f} < 0.99, SSVQE has not converged")
        deltas.append(float(np.angle(overlap)))
    return np.array(deltas)


def subspace_fidelity(problem: SsvqeProblem, theta: Sequence[float], oracle: SpectrumResult) -> float:
    """Normalised overlap Tr(P_learned P_oracle) / l of the two l-dim projectors."""
    outs = output_states(problem, theta)
    learned = outs @ outs.conj().T
    return float(np.real(np.trace(learned @ oracle.projector(problem.levels)))) / problem.levels


def write_trace_csv(result: SsvqeResult, path: str | Path) -> Path:
    path = Path(path)
    levels = len(result.weights)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["iteration", "cost"] + [f"E_{j + 1}" for j in range(levels)])
        for entry in result.trace:
            writer.writerow([entry.iteration, f"{entry.cost:.17g}"] + [f"{e:.17g}" for e in entry.energies])
    return path
