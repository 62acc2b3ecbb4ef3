"""Dense statevector / density-matrix engine.

Gate conventions used by every other module:

    RZ(t) = diag(exp(-i t/2), exp(+i t/2))
    RX(t) = exp(-i t X / 2)
    RY(t) = exp(-i t Y / 2)
    CZ    = diag(1, 1, 1, -1)

Qubit 0 is the most significant bit of the basis index, so for two qubits the
amplitude vector is ordered |00>, |01>, |10>, |11> with the left label
belonging to qubit 0.
"""

from __future__ import annotations

import enum
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np

NORM_ATOL = 1e-12
DENSITY_MAX_QUBITS = 6


class GateKind(str, enum.Enum):
    RX = "RX"
    RY = "RY"
    RZ = "RZ"
    X = "X"
    CZ = "CZ"

    @property
    def parametric(self) -> bool:
        return self in (GateKind.RX, GateKind.RY, GateKind.RZ)

    @property
    def arity(self) -> int:
        return 2 if self is GateKind.CZ else 1


def rx(theta: float) -> np.ndarray:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)


def ry(theta: float) -> np.ndarray:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def rz(theta: float) -> np.ndarray:
    return np.array([[np.exp(-0.5j * theta), 0], [0, np.exp(0.5j * theta)]], dtype=complex)


PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}
CZ_MATRIX = np.diag([1, 1, 1, -1]).astype(complex)

_ROTATIONS = {GateKind.RX: rx, GateKind.RY: ry, GateKind.RZ: rz}


@dataclass(frozen=True)
class GateOp:
    """One gate. Parametric gates carry either a fixed ``angle`` or a free
    parameter ``slot`` whose bound value is multiplied by ``coeff``."""

    kind: GateKind
    targets: tuple[int, ...]
    angle: float | None = None
    slot: int | None = None
    coeff: float = 1.0

    def __post_init__(self):
        kind = GateKind(self.kind)
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "targets", tuple(int(q) for q in self.targets))
        if len(self.targets) != kind.arity:
            raise ValueError(f"{kind.value} acts on {kind.arity} qubit(s), got targets {self.targets}")
        if len(set(self.targets)) != len(self.targets):
            raise ValueError(f"{kind.value} targets must be distinct, got {self.targets}")
        if any(q < 0 for q in self.targets):
            raise ValueError(f"negative qubit index in {self.targets}")
        if kind.parametric:
            if (self.angle is None) == (self.slot is None):
                raise ValueError(f"{kind.value} needs exactly one of angle or slot")
        elif self.angle is not None or self.slot is not None:
            raise ValueError(f"{kind.value} takes no angle")

    @property
    def is_free(self) -> bool:
        return self.slot is not None

    def resolve_angle(self, params: Sequence[float] | None = None) -> float | None:
        if not self.kind.parametric:
            return None
        if self.slot is None:
            return self.angle
        if params is None:
            raise ValueError(f"gate {self} has a free parameter but no params were given")
        return self.coeff * float(params[self.slot])

    def matrix(self, params: Sequence[float] | None = None) -> np.ndarray:
        if self.kind is GateKind.CZ:
            return CZ_MATRIX
        if self.kind is GateKind.X:
            return PAULI["X"]
        return _ROTATIONS[self.kind](self.resolve_angle(params))

    def adjoint(self) -> GateOp:
        if not self.kind.parametric:
            return self
        if self.slot is not None:
            return replace(self, coeff=-self.coeff)
        return replace(self, angle=-self.angle)


def gate(kind: str | GateKind, *targets: int, angle: float | None = None, slot: int | None = None,
         coeff: float = 1.0) -> GateOp:
    return GateOp(GateKind(kind), tuple(targets), angle=angle, slot=slot, coeff=coeff)


@dataclass(frozen=True)
class Circuit:
    n_qubits: int
    ops: tuple[GateOp, ...] = ()

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ValueError("a circuit needs at least one qubit")
        object.__setattr__(self, "ops", tuple(self.ops))
        for op in self.ops:
            if max(op.targets) >= self.n_qubits:
                raise ValueError(f"{op} addresses a qubit outside 0..{self.n_qubits - 1}")

    @cached_property
    def parameter_slots(self) -> dict[int, tuple[int, ...]]:
        """Free-parameter index -> positions of the ops it drives."""
        slots: dict[int, list[int]] = {}
        for pos, op in enumerate(self.ops):
            if op.slot is not None:
                slots.setdefault(op.slot, []).append(pos)
        return {k: tuple(v) for k, v in sorted(slots.items())}

    @property
    def num_parameters(self) -> int:
        slots = self.parameter_slots
        return max(slots) + 1 if slots else 0

    def __len__(self) -> int:
        return len(self.ops)

    def __add__(self, other: Circuit) -> Circuit:
        if other.n_qubits != self.n_qubits:
            raise ValueError("cannot concatenate circuits of different width")
        return Circuit(self.n_qubits, self.ops + other.ops)

    def bind(self, params: Sequence[float]) -> Circuit:
        self.check_params(params)
        ops = []
        for op in self.ops:
            if op.slot is not None:
                op = GateOp(op.kind, op.targets, angle=op.resolve_angle(params))
            ops.append(op)
        return Circuit(self.n_qubits, tuple(ops))

    def adjoint(self) -> Circuit:
        return Circuit(self.n_qubits, tuple(op.adjoint() for op in reversed(self.ops)))

    def shift_slots(self, offset: int) -> Circuit:
        ops = tuple(replace(op, slot=op.slot + offset) if op.slot is not None else op for op in self.ops)
        return Circuit(self.n_qubits, ops)

    def count_ops(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for op in self.ops:
            counts[op.kind.value] = counts.get(op.kind.value, 0) + 1
        return counts

    def check_params(self, params: Sequence[float] | None) -> None:
        expected = self.num_parameters
        got = 0 if params is None else len(params)
        if got != expected:
            raise ValueError(f"circuit has {expected} free parameter(s), got {got}")

    def unitary(self, params: Sequence[float] | None = None) -> np.ndarray:
        """Dense 2^n x 2^n matrix of the circuit."""
        self.check_params(params)
        dim = 2**self.n_qubits
        block = np.eye(dim, dtype=complex).reshape((2,) * self.n_qubits + (dim,))
        for op in self.ops:
            block = _apply_matrix(block, op.matrix(params), op.targets)
        return block.reshape(dim, dim)


@dataclass(frozen=True, eq=False)
class StateVector:
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex).reshape(-1)
        n = amps.size.bit_length() - 1
        if amps.size < 2 or 2**n != amps.size:
            raise ValueError(f"amplitude count {amps.size} is not a power of two >= 2")
        norm = np.linalg.norm(amps)
        if abs(norm - 1) > 1e-8:
            raise ValueError(f"state is not normalised (norm {norm})")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def n_qubits(self) -> int:
        return self.amplitudes.size.bit_length() - 1

    @classmethod
    def zero(cls, n_qubits: int) -> StateVector:
        return cls.basis("0" * n_qubits)

    @classmethod
    def basis(cls, bits: str) -> StateVector:
        amps = np.zeros(2 ** len(bits), dtype=complex)
        amps[int(bits, 2)] = 1
        return cls(amps)

    @classmethod
    def one_hot(cls, n_qubits: int, qubit: int) -> StateVector:
        """X_qubit |0...0>."""
        bits = ["0"] * n_qubits
        bits[qubit] = "1"
        return cls.basis("".join(bits))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def inner(self, other: StateVector) -> complex:
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def to_density(self) -> DensityState:
        return DensityState(np.outer(self.amplitudes, self.amplitudes.conj()))

    def __repr__(self) -> str:
        return f"StateVector(n_qubits={self.n_qubits})"


@dataclass(frozen=True, eq=False)
class DensityState:
    matrix: np.ndarray

    def __post_init__(self):
        rho = np.array(self.matrix, dtype=complex)
        if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
            raise ValueError("density matrix must be square")
        rho.setflags(write=False)
        object.__setattr__(self, "matrix", rho)

    @property
    def n_qubits(self) -> int:
        return self.matrix.shape[0].bit_length() - 1

    def probabilities(self) -> np.ndarray:
        return np.clip(np.real(np.diag(self.matrix)), 0.0, None)

    def __repr__(self) -> str:
        return f"DensityState(n_qubits={self.n_qubits})"


State = StateVector | DensityState


@dataclass(frozen=True)
class NoiseModel:
    """Depolarizing noise after every noisy gate.

    A gate on k qubits is followed by rho -> (1-p) rho + p Tr_k(rho) (x) I/2^k.
    RZ is treated as a virtual (frame-change) gate and stays noiseless unless
    ``rz_noiseless`` is switched off.
    """

    p1: float = 0.0
    p2: float = 0.0
    rz_noiseless: bool = True

    def __post_init__(self):
        for name in ("p1", "p2"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{name}={p} outside [0, 1]")

    @property
    def is_noiseless(self) -> bool:
        return self.p1 == 0.0 and self.p2 == 0.0

    def probability(self, op: GateOp) -> float:
        if op.kind is GateKind.RZ and self.rz_noiseless:
            return 0.0
        return self.p2 if op.kind.arity == 2 else self.p1


def _apply_matrix(tensor: np.ndarray, matrix: np.ndarray, targets: Sequence[int]) -> np.ndarray:
    """Contract ``matrix`` into the leading qubit axes ``targets`` of ``tensor``."""
    k = len(targets)
    gate_t = matrix.reshape((2,) * (2 * k))
    out = np.tensordot(gate_t, tensor, axes=(list(range(k, 2 * k)), list(targets)))
    return np.moveaxis(out, list(range(k)), list(targets))


def apply_gate(state: StateVector, op: GateOp, params: Sequence[float] | None = None) -> StateVector:
    n = state.n_qubits
    if max(op.targets) >= n:
        raise IndexError(f"{op} addresses a qubit outside 0..{n - 1}")
    if op.kind.parametric and op.angle is None and params is None:
        raise ValueError(f"{op.kind.value} gate is missing its angle")
    tensor = state.amplitudes.reshape((2,) * n)
    out = _apply_matrix(tensor, op.matrix(params), op.targets).reshape(-1)
    return StateVector(out)


def _pauli_strings(k: int) -> list[np.ndarray]:
    mats = [PAULI[c] for c in "IXYZ"]
    if k == 1:
        return mats
    return [np.kron(a, b) for a in mats for b in mats]


def _depolarize(rho: np.ndarray, n: int, targets: Sequence[int], p: float) -> np.ndarray:
    # rho as a 2n-index tensor: row axes 0..n-1, column axes n..2n-1
    reduced = rho
    for q in sorted(targets, reverse=True):
        reduced = np.trace(reduced, axis1=q, axis2=q + reduced.ndim // 2)
    identity = np.eye(2 ** len(targets)).reshape((2,) * (2 * len(targets))) / 2 ** len(targets)
    full = np.multiply.outer(reduced, identity)
    # full axes: [rows without targets, cols without targets, target rows, target cols]
    m = n - len(targets)
    rest = [q for q in range(n) if q not in targets]
    order = [0] * (2 * n)
    for i, q in enumerate(rest):
        order[q] = i
        order[n + q] = m + i
    for i, q in enumerate(targets):
        order[q] = 2 * m + i
        order[n + q] = 2 * m + len(targets) + i
    mixed = np.transpose(full, order)
    return (1 - p) * rho + p * mixed


def _run_density(circuit: Circuit, params, rho: np.ndarray, noise: NoiseModel) -> np.ndarray:
    n = circuit.n_qubits
    tensor = rho.reshape((2,) * (2 * n))
    for op in circuit.ops:
        m = op.matrix(params)
        tensor = _apply_matrix(tensor, m, op.targets)
        tensor = _apply_matrix(tensor, m.conj(), [q + n for q in op.targets])
        p = noise.probability(op)
        if p > 0:
            tensor = _depolarize(tensor, n, op.targets, p)
    dim = 2**n
    return tensor.reshape(dim, dim)


def _run_trajectory(circuit: Circuit, params, psi: np.ndarray, noise: NoiseModel,
                    rng: np.random.Generator) -> np.ndarray:
    n = circuit.n_qubits
    tensor = psi.reshape((2,) * n)
    for op in circuit.ops:
        tensor = _apply_matrix(tensor, op.matrix(params), op.targets)
        p = noise.probability(op)
        if p > 0 and rng.random() < p:
            paulis = _pauli_strings(len(op.targets))
            tensor = _apply_matrix(tensor, paulis[rng.integers(len(paulis))], op.targets)
    return tensor.reshape(-1)


def run_circuit(circuit: Circuit, params: Sequence[float] | None = None, input: State | None = None,
                noise: NoiseModel | None = None, *, mode: str = "auto",
                rng: np.random.Generator | int | None = None) -> State:
    """Execute ``circuit`` on ``input`` (default |0...0>).

    Without noise (or with p1 = p2 = 0) a StateVector is returned. With noise,
    ``mode`` selects ``"density"`` (exact channel, returns DensityState) or
    ``"trajectory"`` (one stochastic Pauli-jump sample, returns StateVector);
    ``"auto"`` picks density up to 6 qubits.
    """
    circuit.check_params(params)
    if input is None:
        input = StateVector.zero(circuit.n_qubits)
    if input.n_qubits != circuit.n_qubits:
        raise ValueError(f"input has {input.n_qubits} qubits, circuit has {circuit.n_qubits}")
    noisy = noise is not None and not noise.is_noiseless

    if isinstance(input, DensityState) or (noisy and _resolve_mode(mode, circuit.n_qubits) == "density"):
        rho = input.matrix if isinstance(input, DensityState) else input.to_density().matrix
        return DensityState(_run_density(circuit, params, rho, noise or NoiseModel()))

    if noisy:
        rng = np.random.default_rng(rng)
        return StateVector(_run_trajectory(circuit, params, input.amplitudes, noise, rng))

    tensor = input.amplitudes.reshape((2,) * circuit.n_qubits)
    for op in circuit.ops:
        tensor = _apply_matrix(tensor, op.matrix(params), op.targets)
    return StateVector(tensor.reshape(-1))


def _resolve_mode(mode: str, n_qubits: int) -> str:
    if mode == "auto":
        return "density" if n_qubits <= DENSITY_MAX_QUBITS else "trajectory"
    if mode not in ("density", "trajectory"):
        raise ValueError(f"unknown noise mode {mode!r}")
    return mode


def _embed(matrix: np.ndarray, targets: Sequence[int], n: int) -> np.ndarray:
    dim = 2**n
    return _apply_matrix(np.eye(dim, dtype=complex).reshape((2,) * n + (dim,)), matrix, targets).reshape(dim, dim)


class DenseProgram:
    """A circuit flattened into full-width steps for small registers.

    Runs of bound gates are multiplied into one matrix; free RZ gates become
    diagonal phase vectors. Evaluation is then a handful of small matmuls.
    """

    def __init__(self, circuit: Circuit):
        n = circuit.n_qubits
        self.n_qubits = n
        bits = (np.arange(2**n)[:, None] >> (n - 1 - np.arange(n))[None, :]) & 1
        self._z_signs = 1 - 2 * bits  # +1 where the qubit is |0>
        self.steps: list[tuple] = []
        pending: np.ndarray | None = None
        for op in circuit.ops:
            if op.slot is None:
                m = _embed(op.matrix(), op.targets, n)
                pending = m if pending is None else m @ pending
                continue
            if pending is not None:
                self.steps.append(("matrix", pending))
                pending = None
            if op.kind is GateKind.RZ:
                self.steps.append(("rz", op.slot, op.coeff, self._z_signs[:, op.targets[0]]))
            else:
                self.steps.append(("op", op))
        if pending is not None:
            self.steps.append(("matrix", pending))

    def run(self, params: Sequence[float] | None, block: np.ndarray) -> np.ndarray:
        for step in self.steps:
            kind = step[0]
            if kind == "matrix":
                block = step[1] @ block
            elif kind == "rz":
                _, slot, coeff, signs = step
                block = np.exp(-0.5j * coeff * params[slot] * signs)[:, None] * block
            else:
                op = step[1]
                block = _embed(op.matrix(params), op.targets, self.n_qubits) @ block
        return block


DENSE_PROGRAM_MAX_QUBITS = 8
_PROGRAMS: dict[int, tuple[Circuit, DenseProgram]] = {}


def dense_program(circuit: Circuit) -> DenseProgram:
    key = id(circuit)
    hit = _PROGRAMS.get(key)
    if hit is None or hit[0] is not circuit:
        if len(_PROGRAMS) > 256:
            _PROGRAMS.clear()
        hit = (circuit, DenseProgram(circuit))
        _PROGRAMS[key] = hit
    return hit[1]


def run_batch(circuit: Circuit, params: Sequence[float] | None, inputs: np.ndarray) -> np.ndarray:
    """Noiseless run on several input columns at once; ``inputs`` is (2^n, k)."""
    circuit.check_params(params)
    n = circuit.n_qubits
    if n <= DENSE_PROGRAM_MAX_QUBITS:
        return dense_program(circuit).run(params, np.asarray(inputs, dtype=complex))
    k = inputs.shape[1]
    tensor = inputs.reshape((2,) * n + (k,))
    for op in circuit.ops:
        tensor = _apply_matrix(tensor, op.matrix(params), op.targets)
    return tensor.reshape(2**n, k)


def basis_change(basis: str) -> Circuit:
    """Rotations mapping the eigenbasis of the Pauli letters in ``basis`` onto Z."""
    ops = []
    for q, letter in enumerate(basis):
        if letter == "X":
            ops.append(gate("RY", q, angle=-np.pi / 2))
        elif letter == "Y":
            ops.append(gate("RX", q, angle=np.pi / 2))
        elif letter not in "IZ":
            raise ValueError(f"unknown Pauli letter {letter!r}")
    return Circuit(len(basis), tuple(ops))


def born_probabilities(state: State, basis: str | None = None) -> np.ndarray:
    if basis is not None:
        if len(basis) != state.n_qubits:
            raise ValueError(f"basis {basis!r} does not match {state.n_qubits} qubits")
        state = run_circuit(basis_change(basis), input=state)
    probs = state.probabilities()
    return probs / probs.sum()


def sample_counts(state: State, basis: str | None, shots: int, seed: int | np.random.Generator) -> dict[str, int]:
    """Computational-basis histogram after rotating into ``basis`` (e.g. ``"XZ"``).

    Keys are bitstrings with qubit 0 leftmost; only observed outcomes appear.
    """
    if shots < 1:
        raise ValueError("shots must be >= 1")
    rng = np.random.default_rng(seed)
    probs = born_probabilities(state, basis)
    counts = rng.multinomial(shots, probs)
    n = state.n_qubits
    return {format(i, f"0{n}b"): int(c) for i, c in enumerate(counts) if c}


def fidelity(a: State, b: State) -> float:
    """|<a|b>|^2 for pure states, <a|rho|a> when one side is mixed."""
    if isinstance(a, StateVector) and isinstance(b, StateVector):
        return float(abs(a.inner(b)) ** 2)
    if isinstance(a, DensityState):
        a, b = b, a
    if isinstance(a, DensityState):
        raise TypeError("fidelity between two mixed states is not supported")
    return float(np.real(np.vdot(a.amplitudes, b.matrix @ a.amplitudes)))


def equal_up_to_global_phase(a: StateVector | np.ndarray, b: StateVector | np.ndarray, atol: float = 1e-10) -> bool:
    """Vectors or matrices equal up to a single unit-modulus factor."""
    x = a.amplitudes if isinstance(a, StateVector) else np.asarray(a)
    y = b.amplitudes if isinstance(b, StateVector) else np.asarray(b)
    if x.shape != y.shape:
        return False
    overlap = np.vdot(x.reshape(-1), y.reshape(-1))
    if abs(overlap) < 1e-15:
        return bool(np.allclose(x, 0, atol=atol) and np.allclose(y, 0, atol=atol))
    phase = overlap / abs(overlap)
    return bool(np.allclose(x * phase, y, atol=atol))


def circuit_from(n_qubits: int, ops: Iterable[GateOp]) -> Circuit:
    return Circuit(n_qubits, tuple(ops))


__all__ = [
    "GateKind", "GateOp", "Circuit", "StateVector", "DensityState", "NoiseModel",
    "gate", "rx", "ry", "rz", "PAULI", "CZ_MATRIX",
    "apply_gate", "run_circuit", "run_batch", "sample_counts", "born_probabilities", "basis_change",
    "fidelity", "equal_up_to_global_phase", "circuit_from",
]
