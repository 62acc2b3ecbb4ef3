"""Subspace time evolution U(theta*) T(t) U^dag(theta*).

The encoder U^dag maps the learned low-energy eigenstates onto one-hot
basis states, the phase layer T(t) = prod_j RZ_j(-E_j t) stamps
exp(-i E_j t) on each of them (up to a global phase), and the decoder U maps
back. The circuit depth does not depend on t.
"""

from __future__ import annotations

import warnings
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.linalg import expm

from .ansatz import one_hot_indices
from .core import Circuit, NoiseModel, State, StateVector, gate, run_circuit
from .observables import Observable, SpectrumResult, diagonalize, expectation, sampled_expectation

LEAKAGE_WARN = 1e-3


class SubspaceLeakageWarning(UserWarning):
    """The input state has weight outside the learned eigensubspace."""


@dataclass(frozen=True)
class PhaseTable:
    energies: tuple[float, ...]
    qubits: tuple[int, ...] | None = None

    def __post_init__(self):
        energies = tuple(float(e) for e in self.energies)
        object.__setattr__(self, "energies", energies)
        qubits = tuple(range(len(energies))) if self.qubits is None else tuple(self.qubits)
        if len(qubits) != len(energies):
            raise ValueError("need one qubit per level")
        if len(set(qubits)) != len(qubits):
            raise ValueError(f"levels must map to distinct qubits, got {qubits}")
        object.__setattr__(self, "qubits", qubits)

    @property
    def levels(self) -> int:
        return len(self.energies)


def build_phase_layer(table: PhaseTable, t: float, n_qubits: int) -> Circuit:
    """One RZ(-E_j t) per mapped qubit."""
    if not np.isfinite(t):
        raise ValueError(f"time must be finite, got {t}")
    return Circuit(n_qubits, tuple(gate("RZ", q, angle=-e * t) for e, q in zip(table.energies, table.qubits)))


@dataclass(frozen=True, eq=False)
class EvolutionPlan:
    """Decoder U(theta*) (bound circuit, or a dense matrix for oracle-built
    encoders) plus the eigenenergy phase table."""

    decoder: Circuit | np.ndarray
    phase: PhaseTable
    hamiltonian: Observable | None = None

    @property
    def n_qubits(self) -> int:
        if isinstance(self.decoder, Circuit):
            return self.decoder.n_qubits
        return int(np.log2(self.decoder.shape[0]))

    @property
    def encoder(self) -> Circuit | np.ndarray:
        if isinstance(self.decoder, Circuit):
            return self.decoder.adjoint()
        return self.decoder.conj().T

    @cached_property
    def decoder_matrix(self) -> np.ndarray:
        if isinstance(self.decoder, Circuit):
            return self.decoder.unitary()
        return np.asarray(self.decoder, dtype=complex)

    def circuit(self, t: float) -> Circuit:
        if not isinstance(self.decoder, Circuit):
            raise TypeError("plan was built from a dense matrix and has no gate-level circuit")
        return self.encoder + build_phase_layer(self.phase, t, self.n_qubits) + self.decoder

    def encoded_circuit(self, prep: Circuit, t: float) -> Circuit:
        """prep + T(t) + U: for preparations that already live on the one-hot
        basis, where the encoder would cancel against U anyway."""
        if not isinstance(self.decoder, Circuit):
            raise TypeError("plan was built from a dense matrix and has no gate-level circuit")
        return prep + build_phase_layer(self.phase, t, self.n_qubits) + self.decoder

    def unitary(self, t: float) -> np.ndarray:
        u = self.decoder_matrix
        phases = build_phase_layer(self.phase, t, self.n_qubits).unitary()
        return u @ phases @ u.conj().T

    def learned_states(self) -> np.ndarray:
        """Columns U|phi_j> spanning the simulatable subspace."""
        idx = [1 << (self.n_qubits - 1 - q) for q in self.phase.qubits]
        return self.decoder_matrix[:, idx]


def plan_from_ssvqe(result, hamiltonian: Observable | None = None) -> EvolutionPlan:
    """Plan using the SSVQE circuit and its own energy estimates."""
    return EvolutionPlan(result.decoder(), PhaseTable(tuple(result.energies)), hamiltonian)


def oracle_plan(hamiltonian: Observable, levels: int, spectrum: SpectrumResult | None = None) -> EvolutionPlan:
    """A perfect encoder: U maps X_j|0> to the exact j-th eigenvector.

    The remaining eigenvectors fill the non-one-hot basis columns in order,
    which completes U to a unitary.
    """
    spectrum = diagonalize(hamiltonian) if spectrum is None else spectrum
    n = hamiltonian.n_qubits
    targets = one_hot_indices(n, levels)
    others = [i for i in range(2**n) if i not in targets]
    u = np.zeros((2**n, 2**n), dtype=complex)
    for j, idx in enumerate(targets + others):
        u[:, idx] = spectrum.eigenvectors[:, j]
    return EvolutionPlan(u, PhaseTable(tuple(spectrum.eigenvalues[:levels])), hamiltonian)


def out_of_subspace_weight(plan: EvolutionPlan, state: StateVector) -> float:
    overlaps = plan.learned_states().conj().T @ state.amplitudes
    return float(max(0.0, 1.0 - np.sum(np.abs(overlaps) ** 2)))


def evolve_state(plan: EvolutionPlan, state: StateVector | Circuit, t: float, noise: NoiseModel | None = None,
                 *, mode: str = "auto", rng=None) -> State:
    """Apply the evolution circuit at time t.

    ``state`` is either an input state or a preparation circuit acting on
    |0...0> (the latter is part of the noisy run).
    """
    prep = state if isinstance(state, Circuit) else None
    if prep is not None:
        state = run_circuit(prep)
    weight = out_of_subspace_weight(plan, state)
    if weight > LEAKAGE_WARN:
        warnings.warn(f"input has weight {weight:.3g} outside the learned subspace", SubspaceLeakageWarning,
                      stacklevel=2)
    if not isinstance(plan.decoder, Circuit):
        if noise is not None and not noise.is_noiseless:
            raise ValueError("noisy evolution needs a gate-level decoder")
        return StateVector(plan.unitary(t) @ state.amplitudes)
    circuit = plan.circuit(t)
    if prep is not None:
        return run_circuit(prep + circuit, noise=noise, mode=mode, rng=rng)
    return run_circuit(circuit, input=state, noise=noise, mode=mode, rng=rng)


def evolve(plan: EvolutionPlan, state: StateVector | Circuit, t: float, observables: Mapping[str, Observable],
           noise: NoiseModel | None = None, shots: int | None = None, seed: int = 0
           ) -> dict[str, tuple[float, float]]:
    """Evolve and measure: label -> (mean, stderr). Exact when ``shots`` is None."""
    out = evolve_state(plan, state, t, noise)
    records = {}
    for k, (label, obs) in enumerate(observables.items()):
        if shots is None:
            records[label] = (expectation(obs, out), 0.0)
        else:
            records[label] = sampled_expectation(obs, out, shots, np.random.SeedSequence([seed, k]))
    return records


def exact_evolution(hamiltonian: Observable, state: StateVector, t: float) -> StateVector:
    """Reference exp(-i H t)|psi> by dense matrix exponential."""
    return StateVector(expm(-1j * t * hamiltonian.matrix) @ state.amplitudes)


def build_extended_hamiltonian(problem: Observable, ancillas: int, field: float) -> Observable:
    """H_problem (x) I^a + B * sum_i (I - Z_{n+i}) over the a appended ancillas.

    The lowest n+a eigenstates are then |psi_problem^i> (x) |0...0> as long
    as the (n+a)-th problem level lies below E_1 + 2B; otherwise the call is
    rejected and the offending eigenvalue reported.
    """
    if ancillas < 0:
        raise ValueError("ancilla count must be >= 0")
    if ancillas == 0:
        return problem
    n = problem.n_qubits
    levels = n + ancillas
    if levels > 2**n:
        raise ValueError(f"problem Hamiltonian has only {2**n} levels, cannot address {levels}")
    spectrum = diagonalize(problem).eigenvalues
    threshold = spectrum[0] + 2 * field
    if field <= 0 or spectrum[levels - 1] >= threshold:
        raise ValueError(f"field B={field} too weak: problem level {levels} at {spectrum[levels - 1]:.6g} "
                         f"is not below E_1 + 2B = {threshold:.6g}")
    total = problem.tensor_identity(ancillas)
    for i in range(ancillas):
        total = total + field * (Observable.identity(n + ancillas)
                                 - Observable.pauli_on("Z", n + i, n + ancillas))
    return total


@dataclass
class SubspaceReport:
    times: np.ndarray
    fidelities: np.ndarray  # (inputs, times)
    out_of_subspace: np.ndarray
    inputs: list[StateVector] = field(repr=False, default_factory=list)

    @property
    def min_fidelity(self) -> float:
        return float(self.fidelities.min())


def verify_subspace_evolution(plan: EvolutionPlan, oracle: SpectrumResult, times: Sequence[float],
                              inputs: Sequence[StateVector] | None = None, n_random: int = 8,
                              seed: int = 0) -> SubspaceReport:
    """Compare SVQS against exp(-i H t) restricted to the oracle subspace.

    Without explicit ``inputs``, random states inside span{|E_1>..|E_l>} are
    drawn. Fidelity is |<psi_exact(t)|psi_svqs(t)>|^2 where psi_exact is the
    restricted (unnormalised) evolution, so inputs outside the subspace score
    by their in-subspace weight only; their out-of-subspace weight is reported.
    """
    levels = plan.phase.levels
    basis = oracle.eigenvectors[:, :levels]
    energies = oracle.eigenvalues[:levels]
    if inputs is None:
        rng = np.random.default_rng(seed)
        inputs = []
        for _ in range(n_random):
            c = rng.normal(size=levels) + 1j * rng.normal(size=levels)
            inputs.append(StateVector(basis @ (c / np.linalg.norm(c))))
    times = np.asarray(times, dtype=float)
    fids = np.zeros((len(inputs), times.size))
    leak = np.zeros(len(inputs))
    for i, psi in enumerate(inputs):
        coeffs = basis.conj().T @ psi.amplitudes
        leak[i] = max(0.0, 1.0 - float(np.sum(np.abs(coeffs) ** 2)))
        for k, t in enumerate(times):
            exact = basis @ (np.exp(-1j * energies * t) * coeffs)
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", SubspaceLeakageWarning)
                out = evolve_state(plan, psi, t)
            fids[i, k] = abs(np.vdot(exact, out.amplitudes)) ** 2
    return SubspaceReport(times, fids, leak, list(inputs))
