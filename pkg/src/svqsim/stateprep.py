"""Variational preparation of initial states inside the simulatable subspace.

A one-hot-preserving circuit U_ST(phi) acts on X_0|0...0>, the SSVQE
decoder U(theta*) maps the result into the eigensubspace, and
F = sum_i (<O_i> - target_i)^2 is minimised over phi on that physical state.
"""

from __future__ import annotations

from collections.abc import Callable, Sequence
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .ansatz import SubspacePrepSpec, build_subspace_prep, one_hot_indices, random_parameters
from .core import Circuit, StateVector, run_batch
from .observables import Observable, occupancy_observable
from .ssvqe import FD_STEP, central_gradient

DEFAULT_RESTARTS = 16


@dataclass(frozen=True, eq=False)
class PrepObjective:
    targets: tuple[tuple[Observable, float], ...]

    def values(self, psi: np.ndarray) -> np.ndarray:
        return np.array([np.real(np.vdot(psi, obs.matrix @ psi)) for obs, _ in self.targets])

    def cost(self, psi: np.ndarray) -> float:
        goals = np.array([v for _, v in self.targets])
        return float(np.sum((self.values(psi) - goals) ** 2))


def h2_occupancy_objective() -> PrepObjective:
    """Both orbital occupancies at 0.5, i.e. F = (<Z0>^2 + <Z1>^2) / 4."""
    return PrepObjective(((occupancy_observable(0), 0.5), (occupancy_observable(1), 0.5)))


@dataclass(frozen=True)
class PrepTraceEntry:
    iteration: int
    cost: float
    values: tuple[float, ...]


@dataclass(frozen=True, eq=False)
class PrepResult:
    phi_star: np.ndarray
    cost: float
    trace: list[PrepTraceEntry]
    amplitudes: np.ndarray  # U_ST(phi*)|phi_1> on the one-hot basis states
    state: StateVector  # decoded physical state U(theta*) U_ST(phi*)|phi_1>
    converged: bool
    restart_costs: list[float] = field(default_factory=list)


def _decoder_matrix(decoder: Circuit | np.ndarray) -> np.ndarray:
    return decoder.unitary() if isinstance(decoder, Circuit) else np.asarray(decoder, dtype=complex)


def prepared_state(decoder: Circuit | np.ndarray, prep: Circuit, phi: Sequence[float]) -> np.ndarray:
    """U(theta*) U_ST(phi) X_0|0...0> as an amplitude vector."""
    n = prep.n_qubits
    start = np.zeros((2**n, 1), dtype=complex)
    start[one_hot_indices(n, 1)[0], 0] = 1
    encoded = run_batch(prep, phi, start)[:, 0]
    return _decoder_matrix(decoder) @ encoded


def prep_cost(objective: PrepObjective, decoder: Circuit | np.ndarray, prep: Circuit, phi: Sequence[float]) -> float:
    return objective.cost(prepared_state(decoder, prep, phi))


def _minimize(cost_of_state: Callable[[np.ndarray], float], values_of_state: Callable[[np.ndarray], np.ndarray],
              decoder: Circuit | np.ndarray, spec: SubspacePrepSpec, seed: int, restarts: int,
              max_iterations: int) -> PrepResult:
    prep = build_subspace_prep(spec)
    u = _decoder_matrix(decoder)

    def state_of(phi):
        n = prep.n_qubits
        start = np.zeros((2**n, 1), dtype=complex)
        start[one_hot_indices(n, 1)[0], 0] = 1
        return run_batch(prep, phi, start)[:, 0]

    def fun(phi):
        return cost_of_state(u @ state_of(phi))

    rng = np.random.default_rng(seed)
    best = None
    restart_costs = []
    for _ in range(restarts):
        phi0 = random_parameters(prep.num_parameters, rng)
        trace: list[PrepTraceEntry] = []

        def record(phi):
            psi = u @ state_of(phi)
            trace.append(PrepTraceEntry(len(trace), cost_of_state(psi), tuple(values_of_state(psi))))

        record(phi0)
        res = minimize(fun, phi0, jac=lambda x: central_gradient(fun, x, FD_STEP), method="BFGS",
                       callback=record, options={"maxiter": max_iterations, "gtol": 1e-8})
        phi = np.asarray(res.x)
        cost = fun(phi)
        restart_costs.append(cost)
        if best is None or cost < best[1]:
            best = (phi, cost, trace, bool(res.success))
    phi, cost, trace, converged = best
    encoded = state_of(phi)
    return PrepResult(phi_star=phi, cost=cost, trace=trace,
                      amplitudes=encoded[one_hot_indices(prep.n_qubits, spec.levels)],
                      state=StateVector(u @ encoded), converged=converged, restart_costs=restart_costs)


def optimize_prep(objective: PrepObjective, decoder: Circuit | np.ndarray, spec: SubspacePrepSpec, seed: int = 0,
                  restarts: int = DEFAULT_RESTARTS, max_iterations: int = 400) -> PrepResult:
    """BFGS (central finite differences, step 1e-5) over phi, best of ``restarts``."""
    return _minimize(objective.cost, objective.values, decoder, spec, seed, restarts, max_iterations)


def subspace_vqe(hamiltonian: Observable, decoder: Circuit | np.ndarray, spec: SubspacePrepSpec, seed: int = 0,
                 restarts: int = DEFAULT_RESTARTS, max_iterations: int = 400) -> PrepResult:
    """State preparation with F = <H>: VQE restricted to the simulatable subspace."""
    h = hamiltonian.matrix

    def energy(psi):
        return float(np.real(np.vdot(psi, h @ psi)))

    return _minimize(energy, lambda psi: np.array([energy(psi)]), decoder, spec, seed, restarts, max_iterations)
