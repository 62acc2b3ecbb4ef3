"""Subspace variational quantum simulation on a small exact simulator."""

__version__ = "0.1.0"

from .core import Circuit, GateKind, GateOp, NoiseModel, StateVector, DensityState, gate, run_circuit  # noqa: E402
from .observables import Observable, PauliTerm, diagonalize, expectation, sampled_expectation  # noqa: E402
from .ansatz import AnsatzSpec, SubspacePrepSpec, build_ansatz, build_subspace_prep  # noqa: E402
from .ssvqe import SsvqeProblem, SsvqeResult, optimize  # noqa: E402
from .svqs import EvolutionPlan, PhaseTable, build_extended_hamiltonian, evolve, plan_from_ssvqe  # noqa: E402
from .stateprep import PrepObjective, optimize_prep  # noqa: E402
from .mitigation import AmplificationRule, amplify_circuit, extrapolate  # noqa: E402

__all__ = [
    "AmplificationRule", "AnsatzSpec", "Circuit", "DensityState", "EvolutionPlan", "GateKind", "GateOp",
    "NoiseModel", "Observable", "PauliTerm", "PhaseTable", "PrepObjective", "SsvqeProblem", "SsvqeResult",
    "StateVector", "SubspacePrepSpec", "amplify_circuit", "build_ansatz", "build_extended_hamiltonian",
    "build_subspace_prep", "diagonalize", "evolve", "expectation", "extrapolate", "gate", "optimize",
    "optimize_prep", "plan_from_ssvqe", "run_circuit", "sampled_expectation",
]
